use super::{init, Matrix, Param, RngStream};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Valid 1-D cross-correlation of one filter width followed by a global max
/// over positions.
///
/// The kernel is stored as a `(width·in_ch) × out_ch` matrix: row
/// `k·in_ch + c` holds the weights applied to channel `c` at offset `k`.
#[derive(Clone, Debug)]
pub struct Conv1d<T = f64> {
    pub width: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: Param<T>,
    pub bias: Param<T>,
}

impl<T: Real> Conv1d<T> {
    pub fn new(prefix: &str, width: usize, in_ch: usize, out_ch: usize, rng: &mut RngStream) -> Self {
        let fan_in = width * in_ch;
        let kernel = init::glorot_uniform(fan_in, out_ch, fan_in, out_ch, rng);
        Self {
            width,
            in_ch,
            out_ch,
            kernel: Param::new(format!("{prefix}.k{width}"), kernel),
            bias: Param::zeros(format!("{prefix}.b{width}"), 1, out_ch),
        }
    }

    fn check(&self, seq: &Matrix<T>) -> Result<()> {
        if seq.cols() != self.in_ch {
            return Err(Error::Dimension {
                op: "conv1d",
                left: seq.shape(),
                right: self.kernel.shape(),
            });
        }
        if seq.rows() < self.width {
            return Err(Error::SequenceTooShort {
                len: seq.rows(),
                width: self.width,
            });
        }
        Ok(())
    }

    /// Full convolution output, `(L − k + 1) × out_ch`.
    pub fn correlate(&self, seq: &Matrix<T>) -> Result<Matrix<T>> {
        self.check(seq)?;
        let positions = seq.rows() - self.width + 1;
        let mut out = Matrix::zeros(positions, self.out_ch);
        let span = self.width * self.in_ch;
        for p in 0..positions {
            // the window rows p..p+width are contiguous in row-major storage
            let window = &seq.data()[p * self.in_ch..p * self.in_ch + span];
            let o = out.row_mut(p);
            o.copy_from_slice(self.bias.value.row(0));
            for (r, &x) in window.iter().enumerate() {
                if x == T::zero() {
                    continue;
                }
                for (ov, &kv) in o.iter_mut().zip(self.kernel.value.row(r)) {
                    *ov = *ov + x * kv;
                }
            }
        }
        Ok(out)
    }

    /// Pooled channel maxima and the (first) argmax position per channel.
    pub fn forward(&self, seq: &Matrix<T>) -> Result<(Vec<T>, Vec<usize>)> {
        let conv = self.correlate(seq)?;
        let mut best = conv.row(0).to_vec();
        let mut arg = vec![0usize; self.out_ch];
        for p in 1..conv.rows() {
            for (c, &v) in conv.row(p).iter().enumerate() {
                if v > best[c] {
                    best[c] = v;
                    arg[c] = p;
                }
            }
        }
        Ok((best, arg))
    }

    /// Routes `dpooled` to the argmax positions; accumulates parameter
    /// gradients and adds the input gradient into `dseq`.
    pub fn backward(
        &mut self,
        seq: &Matrix<T>,
        argmax: &[usize],
        dpooled: &[T],
        dseq: &mut Matrix<T>,
    ) -> Result<()> {
        self.check(seq)?;
        let span = self.width * self.in_ch;
        for (o, (&p, &g)) in argmax.iter().zip(dpooled).enumerate() {
            if g == T::zero() {
                continue;
            }
            let b = self.bias.grad.get(0, o);
            self.bias.grad.set(0, o, b + g);
            let base = p * self.in_ch;
            for r in 0..span {
                let x = seq.data()[base + r];
                let kg = self.kernel.grad.get(r, o);
                self.kernel.grad.set(r, o, kg + x * g);
                let d = &mut dseq.data_mut()[base + r];
                *d = *d + self.kernel.value.get(r, o) * g;
            }
        }
        Ok(())
    }
}

/// Several filter widths applied to the same sequence, pooled outputs
/// concatenated in width order.
#[derive(Clone, Debug)]
pub struct ConvBank<T = f64> {
    pub convs: Vec<Conv1d<T>>,
}

impl<T: Real> ConvBank<T> {
    pub fn new(prefix: &str, widths: &[usize], in_ch: usize, out_ch: usize, rng: &mut RngStream) -> Self {
        Self {
            convs: widths
                .iter()
                .map(|&w| Conv1d::new(prefix, w, in_ch, out_ch, rng))
                .collect(),
        }
    }

    pub fn output_width(&self) -> usize {
        self.convs.iter().map(|c| c.out_ch).sum()
    }

    pub fn forward(&self, seq: &Matrix<T>) -> Result<(Vec<T>, Vec<Vec<usize>>)> {
        let mut pooled = Vec::with_capacity(self.output_width());
        let mut args = Vec::with_capacity(self.convs.len());
        for c in &self.convs {
            let (p, a) = c.forward(seq)?;
            pooled.extend(p);
            args.push(a);
        }
        Ok((pooled, args))
    }

    pub fn backward(
        &mut self,
        seq: &Matrix<T>,
        args: &[Vec<usize>],
        dpooled: &[T],
    ) -> Result<Matrix<T>> {
        let mut dseq = Matrix::zeros(seq.rows(), seq.cols());
        let mut off = 0;
        for (c, a) in self.convs.iter_mut().zip(args) {
            c.backward(seq, a, &dpooled[off..off + c.out_ch], &mut dseq)?;
            off += c.out_ch;
        }
        Ok(dseq)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.convs
            .iter_mut()
            .flat_map(|c| [&mut c.kernel, &mut c.bias])
            .collect()
    }
}
