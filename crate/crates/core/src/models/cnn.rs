use super::input::{labels_of, EmbeddingInput};
use super::network::Network;
use crate::error::{Error, Result};
use crate::features::{SliceTensor, DEMO_WIDTH};
use crate::numcore::{
    affine_backward, affine_forward, init, softmax_cross_entropy, ConvBank, Matrix, Param, RngStream,
};

/// Per slice, the concepts form a length-`V` sequence with `D_emb` channels
/// (embedding plus frequency). One convolution bank is shared by all slices;
/// relu'd pooled features of every slice and the demographics feed a dense
/// head.
#[derive(Clone, Debug)]
pub struct CnnClassifier {
    pub input: EmbeddingInput,
    pub bank: ConvBank,
    pub steps: usize,
    pub head_w: Param,
    pub head_b: Param,
}

impl CnnClassifier {
    pub fn new(
        vocab: usize,
        emb_dim: usize,
        steps: usize,
        widths: &[usize],
        channels: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if let Some(&w) = widths.iter().max() {
            if w > vocab {
                return Err(Error::SequenceTooShort { len: vocab, width: w });
            }
        }
        let input = EmbeddingInput::new(vocab, emb_dim, rng);
        let bank = ConvBank::new("cnn", widths, emb_dim, channels, rng);
        let fan_in = steps * bank.output_width() + DEMO_WIDTH;
        Ok(Self {
            input,
            steps,
            head_w: Param::new("head.w", init::glorot_uniform(fan_in, 2, fan_in, 2, rng)),
            head_b: Param::zeros("head.b", 1, 2),
            bank,
        })
    }

    fn sequence(&self, x: &SliceTensor, i: usize, s: usize) -> Matrix {
        let d = self.input.emb_dim;
        let mut seq = Matrix::zeros(x.v, d);
        for c in 0..x.v {
            self.input.concept_row(x, i, s, c, seq.row_mut(c));
        }
        seq
    }

    /// Head input per row plus pooling argmaxes per (row, slice).
    #[allow(clippy::type_complexity)]
    fn features(&self, x: &SliceTensor, rows: &[usize]) -> Result<(Matrix, Vec<Vec<Vec<usize>>>)> {
        let p = self.bank.output_width();
        let mut feats = Matrix::zeros(rows.len(), self.steps * p + DEMO_WIDTH);
        let mut args = Vec::with_capacity(rows.len() * self.steps);
        for (r, &i) in rows.iter().enumerate() {
            for s in 0..self.steps {
                let (pooled, a) = self.bank.forward(&self.sequence(x, i, s))?;
                for (dst, v) in feats.row_mut(r)[s * p..(s + 1) * p].iter_mut().zip(pooled) {
                    *dst = v.max(0.0);
                }
                args.push(a);
            }
            feats.row_mut(r)[self.steps * p..].copy_from_slice(&x.demographics[i]);
        }
        Ok((feats, args))
    }
}

impl Network for CnnClassifier {
    fn check_input(&self, x: &SliceTensor) -> Result<()> {
        self.input.check(x)?;
        if x.t != self.steps {
            return Err(Error::Dimension {
                op: "cnn window",
                left: (x.n, x.t),
                right: (self.steps, 0),
            });
        }
        Ok(())
    }

    fn logits(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        affine_forward(&self.features(x, rows)?.0, &self.head_w, &self.head_b)
    }

    fn loss_and_grad(&mut self, x: &SliceTensor, rows: &[usize], _rng: Option<&mut RngStream>) -> Result<f64> {
        let (feats, args) = self.features(x, rows)?;
        let logits = affine_forward(&feats, &self.head_w, &self.head_b)?;
        let (loss, dl) = softmax_cross_entropy(&logits, &labels_of(x, rows))?;
        let df = affine_backward(&feats, &mut self.head_w, &mut self.head_b, &dl)?;
        let p = self.bank.output_width();
        let d = self.input.emb_dim;
        for (r, &i) in rows.iter().enumerate() {
            for s in 0..self.steps {
                let block = &df.row(r)[s * p..(s + 1) * p];
                let dpooled: Vec<f64> = block
                    .iter()
                    .zip(&feats.row(r)[s * p..(s + 1) * p])
                    .map(|(&g, &f)| if f > 0.0 { g } else { 0.0 })
                    .collect();
                let seq = self.sequence(x, i, s);
                let dseq = self.bank.backward(&seq, &args[r * self.steps + s], &dpooled)?;
                for c in 0..x.v {
                    for (g, &v) in self.input.emb.grad.row_mut(c).iter_mut().zip(&dseq.row(c)[..d - 1]) {
                        *g += v;
                    }
                }
            }
        }
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.input.emb];
        v.extend(self.bank.convs.iter().flat_map(|c| [&c.kernel, &c.bias]));
        v.extend([&self.head_w, &self.head_b]);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.input.emb];
        v.extend(self.bank.params_mut());
        v.extend([&mut self.head_w, &mut self.head_b]);
        v
    }
}
