use crate::error::{Error, Result};
use crate::features::{SliceTensor, DEMO_WIDTH};
use crate::numcore::{init, Matrix, Param, RngStream};

/// Learned concept embeddings extended by one frequency slot per concept.
#[derive(Clone, Debug)]
pub struct EmbeddingInput {
    /// `V × (D_emb − 1)`
    pub emb: Param,
    pub emb_dim: usize,
}

impl EmbeddingInput {
    pub fn new(vocab: usize, emb_dim: usize, rng: &mut RngStream) -> Self {
        Self {
            emb: Param::new("embedding", init::uniform(vocab, emb_dim - 1, 0.05, rng)),
            emb_dim,
        }
    }

    pub fn vocab(&self) -> usize {
        self.emb.value.rows()
    }

    pub fn step_width(&self) -> usize {
        DEMO_WIDTH + self.vocab() * self.emb_dim
    }

    pub fn check(&self, x: &SliceTensor) -> Result<()> {
        if x.v != self.vocab() {
            return Err(Error::Dimension {
                op: "embedding input",
                left: (x.v, x.t),
                right: self.emb.shape(),
            });
        }
        Ok(())
    }

    /// `x_s` for the given rows: demographics, then per concept its embedding
    /// row followed by its count in slice `s`.
    pub fn step(&self, x: &SliceTensor, rows: &[usize], s: usize) -> Matrix {
        let (v, d) = (self.vocab(), self.emb_dim);
        let mut out = Matrix::zeros(rows.len(), self.step_width());
        for (r, &i) in rows.iter().enumerate() {
            let dst = out.row_mut(r);
            dst[..DEMO_WIDTH].copy_from_slice(&x.demographics[i]);
            let counts = x.slice_row(i, s);
            for c in 0..v {
                let off = DEMO_WIDTH + c * d;
                dst[off..off + d - 1].copy_from_slice(self.emb.value.row(c));
                dst[off + d - 1] = counts[c] as f64;
            }
        }
        out
    }

    /// Accumulates the embedding gradient from `dL/dx_s`.
    pub fn backward(&mut self, dx: &Matrix) {
        let (v, d) = (self.vocab(), self.emb_dim);
        for r in 0..dx.rows() {
            let src = dx.row(r);
            for c in 0..v {
                let off = DEMO_WIDTH + c * d;
                for (g, &s) in self.emb.grad.row_mut(c).iter_mut().zip(&src[off..off + d - 1]) {
                    *g += s;
                }
            }
        }
    }

    /// Concept `c` as a `D_emb` row for slice `s` of patient `i`.
    pub fn concept_row(&self, x: &SliceTensor, i: usize, s: usize, c: usize, out: &mut [f64]) {
        let d = self.emb_dim;
        out[..d - 1].copy_from_slice(self.emb.value.row(c));
        out[d - 1] = x.count(i, s, c) as f64;
    }
}

/// Row-major labels for `rows`.
pub fn labels_of(x: &SliceTensor, rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&i| x.labels[i] as usize).collect()
}

/// `N × (T·V + 12)` rows for tabular models.
pub fn tabular_batch(x: &SliceTensor, rows: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(rows.len(), x.tabular_width());
    for (r, &i) in rows.iter().enumerate() {
        x.tabular_row(i, m.row_mut(r));
    }
    m
}
