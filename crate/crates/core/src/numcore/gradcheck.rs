use super::Param;
use crate::error::Result;
use crate::scalar::Real;

/// A deterministic scalar objective over a set of parameters.
pub trait Differentiable<T: Real = f64> {
    /// Visits every parameter in a fixed order.
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param<T>));

    /// Objective value only.
    fn loss(&mut self) -> Result<T>;

    /// Objective value; gradients are accumulated into each `Param::grad`.
    fn loss_and_grad(&mut self) -> Result<T>;
}

#[derive(Clone, Debug)]
pub struct GradCheckReport<T = f64> {
    pub max_rel_error: T,
    pub worst_param: String,
    pub worst_index: usize,
    pub coordinates: usize,
}

fn nudge<T: Real>(model: &mut impl Differentiable<T>, target: usize, delta: T) {
    let mut seen = 0usize;
    model.visit_params(&mut |p| {
        let n = p.len();
        if target >= seen && target < seen + n {
            let v = &mut p.value.data_mut()[target - seen];
            *v = *v + delta;
        }
        seen += n;
    });
}

/// Compares analytic gradients with central differences
/// `(f(θ+h) − f(θ−h)) / 2h`, coordinate by coordinate.
///
/// The relative error per coordinate is
/// `|analytic − numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn grad_check<T: Real>(model: &mut impl Differentiable<T>, h: T) -> Result<GradCheckReport<T>> {
    model.visit_params(&mut |p| p.zero_grad());
    model.loss_and_grad()?;
    let mut analytic = Vec::new();
    let mut names = Vec::new();
    model.visit_params(&mut |p| {
        for (i, &g) in p.grad.data().iter().enumerate() {
            analytic.push(g);
            names.push((p.name.clone(), i));
        }
    });
    model.visit_params(&mut |p| p.zero_grad());

    let two_h = h + h;
    let floor = T::lit(1e-8);
    let mut report = GradCheckReport {
        max_rel_error: T::zero(),
        worst_param: String::new(),
        worst_index: 0,
        coordinates: analytic.len(),
    };
    for (k, &a) in analytic.iter().enumerate() {
        nudge(model, k, h);
        let plus = model.loss()?;
        nudge(model, k, -two_h);
        let minus = model.loss()?;
        nudge(model, k, h);
        let numeric = (plus - minus) / two_h;
        let rel = (a - numeric).abs() / floor.max(a.abs() + numeric.abs());
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_param = names[k].0.clone();
            report.worst_index = names[k].1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::layers::{affine_backward, affine_forward, softmax_cross_entropy, Activation};
    use crate::numcore::{init, ConvBank, Lstm, Matrix, RngStream};

    struct Quadratic(Param);

    impl Differentiable for Quadratic {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.0)
        }
        fn loss(&mut self) -> Result<f64> {
            let t = self.0.value.get(0, 0);
            Ok(t * t)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            let t = self.0.value.get(0, 0);
            self.0.grad.set(0, 0, 2.0 * t);
            Ok(t * t)
        }
    }

    #[test]
    fn quadratic_is_exact() {
        let mut q = Quadratic(Param::new("t", Matrix::from_rows(&[&[3.0]])));
        let r = grad_check(&mut q, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
        q.loss_and_grad().unwrap();
        assert_eq!(q.0.grad.get(0, 0), 6.0);
    }

    /// Logits as the only parameter, cross-entropy on fixed labels.
    struct SoftmaxLayer {
        logits: Param,
        labels: Vec<usize>,
    }

    impl Differentiable for SoftmaxLayer {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.logits)
        }
        fn loss(&mut self) -> Result<f64> {
            Ok(softmax_cross_entropy(&self.logits.value, &self.labels)?.0)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            let (l, g) = softmax_cross_entropy(&self.logits.value, &self.labels)?;
            self.logits.grad.add_assign(&g)?;
            Ok(l)
        }
    }

    #[test]
    fn softmax_ce_gradient() {
        let mut rng = RngStream::new(3, 0);
        let mut layer = SoftmaxLayer {
            logits: Param::new("logits", init::uniform(6, 2, 3.0, &mut rng)),
            labels: vec![0, 1, 1, 0, 1, 0],
        };
        let r = grad_check(&mut layer, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-7, "{r:?}");
    }

    /// affine → activation → affine → CE
    struct TwoLayer {
        x: Matrix,
        labels: Vec<usize>,
        w1: Param,
        b1: Param,
        w2: Param,
        b2: Param,
        act: Activation,
    }

    impl TwoLayer {
        fn run(&mut self, grad: bool) -> Result<f64> {
            let z = affine_forward(&self.x, &self.w1, &self.b1)?;
            let a = self.act.forward(&z);
            let logits = affine_forward(&a, &self.w2, &self.b2)?;
            let (l, dl) = softmax_cross_entropy(&logits, &self.labels)?;
            if grad {
                let da = affine_backward(&a, &mut self.w2, &mut self.b2, &dl)?;
                let dz = self.act.backward(&z, &a, &da)?;
                affine_backward(&self.x, &mut self.w1, &mut self.b1, &dz)?;
            }
            Ok(l)
        }
    }

    impl Differentiable for TwoLayer {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.w1);
            f(&mut self.b1);
            f(&mut self.w2);
            f(&mut self.b2);
        }
        fn loss(&mut self) -> Result<f64> {
            self.run(false)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            self.run(true)
        }
    }

    #[test]
    fn affine_and_activations_gradient() {
        for (seed, act) in [(1, Activation::Sigmoid), (2, Activation::Tanh), (3, Activation::Relu)] {
            let mut rng = RngStream::new(seed, 0);
            let mut net = TwoLayer {
                x: init::uniform(5, 4, 1.0, &mut rng),
                labels: vec![0, 1, 0, 1, 1],
                w1: Param::new("w1", init::uniform(4, 3, 1.0, &mut rng)),
                b1: Param::new("b1", init::uniform(1, 3, 0.5, &mut rng)),
                w2: Param::new("w2", init::uniform(3, 2, 1.0, &mut rng)),
                b2: Param::new("b2", init::uniform(1, 2, 0.5, &mut rng)),
                act,
            };
            let r = grad_check(&mut net, 1e-5).unwrap();
            assert!(r.max_rel_error < 1e-5, "{act:?}: {r:?}");
        }
    }

    /// Weighted sum of pooled conv outputs.
    struct ConvObjective {
        seq: Matrix,
        bank: ConvBank,
        weights: Vec<f64>,
    }

    impl ConvObjective {
        fn run(&mut self, grad: bool) -> Result<f64> {
            let (pooled, args) = self.bank.forward(&self.seq)?;
            let l = pooled.iter().zip(&self.weights).map(|(p, w)| p * w).sum();
            if grad {
                self.bank.backward(&self.seq, &args, &self.weights)?;
            }
            Ok(l)
        }
    }

    impl Differentiable for ConvObjective {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            for p in self.bank.params_mut() {
                f(p)
            }
        }
        fn loss(&mut self) -> Result<f64> {
            self.run(false)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            self.run(true)
        }
    }

    #[test]
    fn conv_maxpool_gradient_twenty_params() {
        let mut rng = RngStream::new(11, 0);
        // widths 4 and 5 over 2 input channels, one output channel each:
        // (4·2 + 1) + (5·2 + 1) = 20 parameters
        let mut bank = ConvBank::new("cnn", &[4, 5], 2, 1, &mut rng);
        for c in &mut bank.convs {
            c.bias.value = init::uniform(1, 1, 0.3, &mut rng);
        }
        let count: usize = bank.convs.iter().map(|c| c.kernel.len() + c.bias.len()).sum();
        assert_eq!(count, 20);
        let mut obj = ConvObjective {
            seq: init::uniform(9, 2, 1.0, &mut rng),
            bank,
            weights: vec![0.7, -1.3],
        };
        let r = grad_check(&mut obj, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }

    /// Sum of hidden states weighted by fixed coefficients.
    struct LstmObjective {
        lstm: Lstm,
        xs: Vec<Matrix>,
        coef: Vec<Matrix>,
    }

    impl LstmObjective {
        fn run(&mut self, grad: bool) -> Result<f64> {
            let cache = self.lstm.forward(&self.xs)?;
            let mut l = 0.0;
            for (h, c) in cache.outputs().iter().zip(&self.coef) {
                l += h.data().iter().zip(c.data()).map(|(a, b)| a * b).sum::<f64>();
            }
            if grad {
                self.lstm.backward(&self.xs, &cache, &self.coef)?;
            }
            Ok(l)
        }
    }

    impl Differentiable for LstmObjective {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            for p in self.lstm.params_mut() {
                f(p)
            }
        }
        fn loss(&mut self) -> Result<f64> {
            self.run(false)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            self.run(true)
        }
    }

    #[test]
    fn lstm_cell_gradient_fifty_params() {
        // input 3, hidden 2: w 3×8 + u 2×8 + b 1×8 = 48 parameters
        let mut rng = RngStream::new(5, 0);
        let mut lstm = Lstm::new("lstm", 3, 2, &mut rng);
        lstm.b.value = init::uniform(1, 8, 0.5, &mut rng);
        let mut obj = LstmObjective {
            lstm,
            xs: (0..3).map(|_| init::uniform(2, 3, 1.0, &mut rng)).collect(),
            coef: (0..3).map(|_| init::uniform(2, 2, 1.0, &mut rng)).collect(),
        };
        let r = grad_check(&mut obj, 1e-5).unwrap();
        assert_eq!(r.coordinates, 48);
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }
}
