use super::Matrix;
use crate::scalar::Real;

/// A trainable tensor with its gradient and Adam moment estimates.
#[derive(Clone, Debug)]
pub struct Param<T = f64> {
    pub name: String,
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
    pub adam_m: Matrix<T>,
    pub adam_v: Matrix<T>,
    pub step_count: u64,
}

impl<T: Real> Param<T> {
    pub fn new(name: impl Into<String>, value: Matrix<T>) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, Matrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}
