use super::input::labels_of;
use crate::error::Result;
use crate::features::SliceTensor;
use crate::numcore::{softmax, softmax_cross_entropy, Differentiable, Matrix, Param, RngStream};

/// A trainable two-class network over slice tensors.
///
/// `loss_and_grad` accumulates into each `Param::grad`; passing `None` for
/// the generator disables dropout.
pub trait Network: Clone + Send + Sync {
    fn check_input(&self, x: &SliceTensor) -> Result<()>;
    fn logits(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix>;
    fn loss_and_grad(&mut self, x: &SliceTensor, rows: &[usize], rng: Option<&mut RngStream>) -> Result<f64>;
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

pub const PREDICT_BATCH: usize = 512;

/// Softmax probabilities for every row, in fixed-size batches.
pub fn predict_network<N: Network>(net: &N, x: &SliceTensor) -> Result<Vec<[f64; 2]>> {
    net.check_input(x)?;
    let mut out = Vec::with_capacity(x.n);
    let rows: Vec<usize> = (0..x.n).collect();
    for chunk in rows.chunks(PREDICT_BATCH) {
        let p = softmax(&net.logits(x, chunk)?);
        out.extend((0..p.rows()).map(|r| [p.get(r, 0), p.get(r, 1)]));
    }
    Ok(out)
}

/// Mean cross-entropy without gradients or dropout.
pub fn mean_loss<N: Network>(net: &N, x: &SliceTensor, rows: &[usize]) -> Result<f64> {
    let logits = net.logits(x, rows)?;
    Ok(softmax_cross_entropy(&logits, &labels_of(x, rows))?.0)
}

/// A network bound to a fixed batch, for gradient checking.
pub struct BatchObjective<'a, N> {
    pub net: N,
    pub x: &'a SliceTensor,
    pub rows: Vec<usize>,
}

impl<N: Network> Differentiable for BatchObjective<'_, N> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for p in self.net.params_mut() {
            f(p);
        }
    }

    fn loss(&mut self) -> Result<f64> {
        mean_loss(&self.net, self.x, &self.rows)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.net.loss_and_grad(self.x, &self.rows, None)
    }
}
