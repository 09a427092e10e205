use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{Matrix, RngStream};

pub const TSNE_INIT_STREAM: u64 = 0x5453_4E45;
pub const MAX_POINTS: usize = 2000;
const BISECTION_STEPS: usize = 50;
/// Entropy tolerance in bits; tighter than the 1e-4 calibration contract.
const ENTROPY_TOL: f64 = 1e-6;
const MIN_GAIN: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub dims: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches to `final_momentum`.
    pub momentum_switch: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            dims: 2,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            init_std: 1e-4,
            seed: 1,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(4..=MAX_POINTS).contains(&n) {
            return Err(Error::Config(format!("t-SNE needs 4..={MAX_POINTS} points, got {n}")));
        }
        if !(self.perplexity > 1.0 && self.perplexity < n as f64 / 3.0) {
            return Err(Error::Config(format!(
                "perplexity {} infeasible for {n} points (needs 1 < p < N/3)",
                self.perplexity
            )));
        }
        if self.iterations < 250 {
            return Err(Error::Config("t-SNE needs at least 250 iterations".into()));
        }
        if self.dims == 0 || self.learning_rate <= 0.0 || self.init_std <= 0.0 {
            return Err(Error::Config("t-SNE dims, learning rate and init std must be positive".into()));
        }
        Ok(())
    }
}

/// Conditional affinities with their calibration.
#[derive(Clone, Debug)]
pub struct Affinities {
    /// Row-stochastic `p_{j|i}`, zero diagonal.
    pub conditional: Matrix,
    /// Precision `β_i = 1 / 2σ_i²`.
    pub beta: Vec<f64>,
    /// `|H(P_i) − log2(perplexity)|` in bits.
    pub entropy_error: Vec<f64>,
}

pub fn squared_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d.set(i, j, s);
            d.set(j, i, s);
        }
    }
    d
}

/// Shannon entropy in bits of row `i` at precision `beta`, and the row.
fn row_entropy(d: &Matrix, i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let n = d.rows();
    // shift by the nearest distance so the largest weight is exp(0)
    let dmin = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for j in 0..n {
        row[j] = if j == i { 0.0 } else { (-(d.get(i, j) - dmin) * beta).exp() };
        sum += row[j];
    }
    let mut h = 0.0;
    for v in row.iter_mut() {
        *v /= sum;
        if *v > 0.0 {
            h -= *v * v.log2();
        }
    }
    h
}

/// Per-row bisection on `β` so each row's entropy equals `log2(perplexity)`.
pub fn calibrate(d: &Matrix, perplexity: f64) -> Affinities {
    let n = d.rows();
    let target = perplexity.log2();
    let mut conditional = Matrix::zeros(n, n);
    let mut beta = vec![1.0; n];
    let mut entropy_error = vec![0.0; n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut b = 1.0;
        let mut h = row_entropy(d, i, b, &mut row);
        for _ in 0..BISECTION_STEPS {
            if (h - target).abs() < ENTROPY_TOL {
                break;
            }
            // entropy falls as β grows
            if h > target {
                lo = b;
                b = if hi.is_finite() { (b + hi) / 2.0 } else { b * 2.0 };
            } else {
                hi = b;
                b = (b + lo) / 2.0;
            }
            h = row_entropy(d, i, b, &mut row);
        }
        beta[i] = b;
        entropy_error[i] = (h - target).abs();
        conditional.row_mut(i).copy_from_slice(&row);
    }
    Affinities {
        conditional,
        beta,
        entropy_error,
    }
}

/// `p_ij = (p_{j|i} + p_{i|j}) / 2N`.
pub fn joint_probabilities(conditional: &Matrix) -> Matrix {
    let n = conditional.rows();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, (conditional.get(i, j) + conditional.get(j, i)) / (2.0 * n as f64));
        }
    }
    p
}

#[derive(Clone, Debug)]
pub struct TsneResult {
    pub coords: Matrix,
    /// `KL(P‖Q)` at the initial layout and after every iteration, against
    /// the unexaggerated `P`.
    pub kl_trace: Vec<f64>,
    pub entropy_error: Vec<f64>,
}

impl TsneResult {
    pub fn initial_kl(&self) -> f64 {
        self.kl_trace[0]
    }

    pub fn final_kl(&self) -> f64 {
        *self.kl_trace.last().expect("non-empty trace")
    }
}

/// Student-t kernel numerators and their off-diagonal sum.
fn kernel(y: &Matrix, num: &mut Matrix) -> f64 {
    let n = y.rows();
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = y.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = 1.0 / (1.0 + d2);
            num.set(i, j, v);
            num.set(j, i, v);
            z += 2.0 * v;
        }
    }
    z
}

fn kl(p: &Matrix, num: &Matrix, z: f64) -> f64 {
    let n = p.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > 0.0 {
                s += pij * (pij / (num.get(i, j) / z).max(f64::MIN_POSITIVE)).ln();
            }
        }
    }
    s
}

/// Seeded Gaussian layout, one row per point.
pub fn initial_layout(n: usize, cfg: &TsneConfig) -> Matrix {
    let mut rng = RngStream::new(cfg.seed, TSNE_INIT_STREAM);
    let data = (0..n * cfg.dims).map(|_| rng.normal() * cfg.init_std).collect();
    Matrix::from_vec(n, cfg.dims, data).expect("sized")
}

fn cmp_rows(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Row order sorted by point values, then by `init` rows when given.
pub fn canonical_order(points: &Matrix, init: Option<&Matrix>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.rows()).collect();
    order.sort_by(|&a, &b| {
        cmp_rows(points.row(a), points.row(b))
            .then_with(|| init.map_or(std::cmp::Ordering::Equal, |m| cmp_rows(m.row(a), m.row(b))))
            .then(a.cmp(&b))
    });
    order
}

fn gather(m: &Matrix, order: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(order.len(), m.cols());
    for (k, &i) in order.iter().enumerate() {
        out.row_mut(k).copy_from_slice(m.row(i));
    }
    out
}

/// Exact t-SNE with a seeded initial layout. The layout is drawn in
/// canonical row order, so permuting the input rows permutes the output
/// rows and changes no value.
pub fn tsne(points: &Matrix, cfg: &TsneConfig) -> Result<TsneResult> {
    let order = canonical_order(points, None);
    let init = initial_layout(points.rows(), cfg);
    let mut placed = Matrix::zeros(init.rows(), init.cols());
    for (k, &i) in order.iter().enumerate() {
        placed.row_mut(i).copy_from_slice(init.row(k));
    }
    tsne_from(points, placed, cfg)
}

/// Exact t-SNE from a given initial layout, run in canonical row order so
/// the result does not depend on how rows are ordered.
pub fn tsne_from(points: &Matrix, init: Matrix, cfg: &TsneConfig) -> Result<TsneResult> {
    let n = points.rows();
    cfg.validate(n)?;
    if init.shape() != (n, cfg.dims) {
        return Err(Error::Dimension {
            op: "t-SNE init",
            left: init.shape(),
            right: (n, cfg.dims),
        });
    }
    if !points.is_finite() {
        return Err(Error::DataIntegrity("non-finite t-SNE input".into()));
    }
    let order = canonical_order(points, Some(&init));
    let res = optimize(&gather(points, &order), gather(&init, &order), cfg)?;
    let mut coords = Matrix::zeros(n, cfg.dims);
    let mut entropy_error = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        coords.row_mut(i).copy_from_slice(res.coords.row(k));
        entropy_error[i] = res.entropy_error[k];
    }
    Ok(TsneResult {
        coords,
        kl_trace: res.kl_trace,
        entropy_error,
    })
}

fn optimize(points: &Matrix, init: Matrix, cfg: &TsneConfig) -> Result<TsneResult> {
    let n = points.rows();
    let aff = calibrate(&squared_distances(points), cfg.perplexity);
    let p = joint_probabilities(&aff.conditional);

    let dims = cfg.dims;
    let mut y = init;
    let mut velocity: Matrix = Matrix::zeros(n, dims);
    let mut gains: Matrix = Matrix::filled(n, dims, 1.0);
    let mut num: Matrix = Matrix::zeros(n, n);
    let mut grad: Matrix = Matrix::zeros(n, dims);
    let mut kl_trace = Vec::with_capacity(cfg.iterations + 1);
    let z = kernel(&y, &mut num);
    kl_trace.push(kl(&p, &num, z));

    for it in 0..cfg.iterations {
        let exag = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let z = kernel(&y, &mut num);
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = (exag * p.get(i, j) - num.get(i, j) / z) * num.get(i, j);
                for k in 0..dims {
                    let g = grad.get(i, k) + 4.0 * w * (y.get(i, k) - y.get(j, k));
                    grad.set(i, k, g);
                }
            }
        }
        for ((yv, (v, g)), gain) in y
            .data_mut()
            .iter_mut()
            .zip(velocity.data_mut().iter_mut().zip(grad.data()))
            .zip(gains.data_mut())
        {
            // gains grow when the step direction flips sign
            *gain = if (*g > 0.0) != (*v > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(MIN_GAIN)
            };
            *v = momentum * *v - cfg.learning_rate * *gain * g;
            *yv += *v;
        }
        for k in 0..dims {
            let mean = (0..n).map(|i| y.get(i, k)).sum::<f64>() / n as f64;
            for i in 0..n {
                y.set(i, k, y.get(i, k) - mean);
            }
        }
        let z = kernel(&y, &mut num);
        let value = kl(&p, &num, z);
        if !value.is_finite() {
            return Err(Error::DataIntegrity(format!("t-SNE KL diverged at iteration {}", it + 1)));
        }
        kl_trace.push(value);
    }
    Ok(TsneResult {
        coords: y,
        kl_trace,
        entropy_error: aff.entropy_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_is_symmetric_and_normalized() {
        let mut rng = RngStream::new(3, 1);
        let x = Matrix::from_vec(20, 3, (0..60).map(|_| rng.normal()).collect()).unwrap();
        let aff = calibrate(&squared_distances(&x), 5.0);
        assert!(aff.entropy_error.iter().all(|&e| e < 1e-4));
        let p = joint_probabilities(&aff.conditional);
        let total: f64 = p.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(p.get(i, j), p.get(j, i));
                assert!(p.get(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn infeasible_perplexity() {
        let x = Matrix::zeros(9, 2);
        let cfg = TsneConfig::default();
        assert!(matches!(tsne(&x, &cfg), Err(Error::Config(_))));
    }
}
