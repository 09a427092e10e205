use super::Param;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Adam hyperparameters; defaults are the reference settings
/// (`lr = 1e-3`, `β1 = 0.9`, `β2 = 0.999`, `ε = 1e-8`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// One bias-corrected Adam update. Zeroes the gradient afterwards.
pub fn adam_step<T: Real>(p: &mut Param<T>, cfg: &AdamConfig) -> Result<()> {
    if !p.grad.is_finite() {
        return Err(Error::NonFiniteGradient(p.name.clone()));
    }
    p.step_count += 1;
    let t = p.step_count as i32;
    let b1 = T::lit(cfg.beta1);
    let b2 = T::lit(cfg.beta2);
    let lr = T::lit(cfg.lr);
    let eps = T::lit(cfg.eps);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let Param {
        value,
        grad,
        adam_m,
        adam_v,
        ..
    } = p;
    for (((theta, &g), m), v) in value
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(adam_m.data_mut())
        .zip(adam_v.data_mut())
    {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *theta = *theta - lr * m_hat / (v_hat.sqrt() + eps);
    }
    grad.fill(T::zero());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Matrix;

    fn scalar_param(v: f64, g: f64) -> Param {
        let mut p = Param::new("theta", Matrix::from_rows(&[&[v]]));
        p.grad.set(0, 0, g);
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar_param(0.0, 1.0);
        adam_step(&mut p, &AdamConfig::default()).unwrap();
        let theta = p.value.get(0, 0);
        assert!((theta + 0.001).abs() < 1e-6);
        assert_eq!(theta, -1e-3 / (1.0 + 1e-8));
        assert_eq!(p.grad.get(0, 0), 0.0);
        assert_eq!(p.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut p = scalar_param(0.25, 0.0);
        adam_step(&mut p, &AdamConfig::default()).unwrap();
        assert_eq!(p.value.get(0, 0), 0.25);
    }

    #[test]
    fn two_steps_match_recurrence() {
        let cfg = AdamConfig::default();
        let mut p = scalar_param(0.0, 1.0);
        adam_step(&mut p, &cfg).unwrap();
        p.grad.set(0, 0, 1.0);
        adam_step(&mut p, &cfg).unwrap();

        // independent evaluation of the recurrences
        let (mut theta, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            let g = 1.0;
            m = 0.9 * m + (1.0 - 0.9) * g;
            v = 0.999 * v + (1.0 - 0.999) * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            theta -= 1e-3 * mh / (vh.sqrt() + 1e-8);
        }
        assert_eq!(p.value.get(0, 0).to_bits(), theta.to_bits());
    }

    #[test]
    fn zero_lr_is_bit_identical() {
        let mut p: Param = Param::new("w", Matrix::from_rows(&[&[0.3, -1.7, 0.0, -0.0]]));
        p.grad = Matrix::from_rows(&[&[1.0, -2.0, 3.0, 0.5]]);
        let before: Vec<u64> = p.value.data().iter().map(|v| v.to_bits()).collect();
        adam_step(&mut p, &AdamConfig::with_lr(0.0)).unwrap();
        let after: Vec<u64> = p.value.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn non_finite_gradient_names_param() {
        let mut p = scalar_param(0.0, f64::NAN);
        p.name = "lstm.w".into();
        let err = adam_step(&mut p, &AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("lstm.w"));
    }
}
