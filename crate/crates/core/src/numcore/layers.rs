use super::{Matrix, Param, RngStream};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `out = x·W + b`, bias broadcast over rows.
pub fn affine_forward<T: Real>(x: &Matrix<T>, w: &Param<T>, b: &Param<T>) -> Result<Matrix<T>> {
    if b.shape() != (1, w.shape().1) {
        return Err(Error::Dimension {
            op: "affine bias",
            left: w.shape(),
            right: b.shape(),
        });
    }
    let mut out = x.matmul(&w.value)?;
    out.add_row_broadcast(&b.value)?;
    Ok(out)
}

/// Accumulates `dW += xᵀ·dout`, `db += Σ_rows dout`; returns `dx = dout·Wᵀ`.
pub fn affine_backward<T: Real>(
    x: &Matrix<T>,
    w: &mut Param<T>,
    b: &mut Param<T>,
    dout: &Matrix<T>,
) -> Result<Matrix<T>> {
    x.matmul_tn_acc(dout, &mut w.grad)?;
    dout.col_sums_acc(&mut b.grad)?;
    dout.matmul_nt(&w.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

/// Logistic function in the branch form that never overflows.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
        }
    }

    pub fn forward<T: Real>(self, x: &Matrix<T>) -> Matrix<T> {
        x.map(|v| self.apply(v))
    }

    /// Derivative expressed through the input `x` and output `y`.
    #[inline]
    pub fn derivative<T: Real>(self, x: T, y: T) -> T {
        match self {
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn backward<T: Real>(self, x: &Matrix<T>, y: &Matrix<T>, dy: &Matrix<T>) -> Result<Matrix<T>> {
        if x.shape() != dy.shape() || y.shape() != dy.shape() {
            return Err(Error::Dimension {
                op: "activation backward",
                left: x.shape(),
                right: dy.shape(),
            });
        }
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .zip(dy.data())
            .map(|((&xv, &yv), &g)| g * self.derivative(xv, yv))
            .collect();
        Matrix::from_vec(x.rows(), x.cols(), data)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Real>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s = s + *v;
        }
        for v in row.iter_mut() {
            *v = *v / s;
        }
    }
    out
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Real>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>)> {
    if labels.len() != logits.rows() {
        return Err(Error::Dimension {
            op: "softmax_cross_entropy",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    let classes = logits.cols();
    if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::InvalidLabel { row, label });
    }
    let n = T::from_usize(labels.len().max(1)).unwrap();
    let mut grad = softmax(logits);
    let mut total = T::zero();
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        total = total + (lse - row[label]);
        let g = grad.row_mut(r);
        g[label] = g[label] - T::one();
        for v in g.iter_mut() {
            *v = *v / n;
        }
    }
    Ok((total / n, grad))
}

/// Per-entry multiplier recorded by a dropout forward pass.
#[derive(Clone, Debug)]
pub enum DropoutMask<T = f64> {
    Identity,
    Scale(Vec<T>),
}

impl<T: Real> DropoutMask<T> {
    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        match self {
            DropoutMask::Identity => x.clone(),
            DropoutMask::Scale(s) => {
                let data = x.data().iter().zip(s).map(|(&v, &k)| v * k).collect();
                Matrix::from_vec(x.rows(), x.cols(), data).expect("mask shape")
            }
        }
    }
}

/// Inverted dropout: survivors are scaled by `1/(1 - rate)` at train time.
pub fn dropout<T: Real>(
    x: &Matrix<T>,
    rate: f64,
    rng: &mut RngStream,
    training: bool,
) -> Result<(Matrix<T>, DropoutMask<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), DropoutMask::Identity));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let scale: Vec<T> = (0..x.data().len())
        .map(|_| if rng.uniform() < rate { T::zero() } else { keep })
        .collect();
    let mask = DropoutMask::Scale(scale);
    Ok((mask.apply(x), mask))
}
