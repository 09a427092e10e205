use super::{Matrix, RngStream};
use crate::scalar::Real;

/// Glorot-uniform: entries in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Real>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut RngStream,
) -> Matrix<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rows, cols, limit, rng)
}

pub fn uniform<T: Real>(rows: usize, cols: usize, limit: f64, rng: &mut RngStream) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.uniform_range(-limit, limit)))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}
