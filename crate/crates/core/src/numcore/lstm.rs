use super::layers::sigmoid;
use super::{init, Matrix, Param, RngStream};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-layer LSTM. Gate columns are laid out `[input | forget | cell | output]`.
#[derive(Clone, Debug)]
pub struct Lstm<T = f64> {
    pub input: usize,
    pub hidden: usize,
    /// `input × 4H`
    pub w: Param<T>,
    /// `H × 4H`
    pub u: Param<T>,
    /// `1 × 4H`
    pub b: Param<T>,
}

/// Activations cached by [`Lstm::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmCache<T = f64> {
    /// Post-activation gates per step, `B × 4H`.
    gates: Vec<Matrix<T>>,
    /// Cell states `c_0..c_T` (index 0 is the zero state).
    cells: Vec<Matrix<T>>,
    /// Hidden states `h_0..h_T` (index 0 is the zero state).
    hiddens: Vec<Matrix<T>>,
}

impl<T: Real> LstmCache<T> {
    /// Hidden states `h_1..h_T`.
    pub fn outputs(&self) -> &[Matrix<T>] {
        &self.hiddens[1..]
    }
}

impl<T: Real> Lstm<T> {
    /// Glorot-uniform weights, zero biases except the forget gate at 1.
    pub fn new(prefix: &str, input: usize, hidden: usize, rng: &mut RngStream) -> Self {
        let g = 4 * hidden;
        let w = init::glorot_uniform(input, g, input, g, rng);
        let u = init::glorot_uniform(hidden, g, hidden, g, rng);
        let mut b = Matrix::zeros(1, g);
        for j in hidden..2 * hidden {
            b.set(0, j, T::one());
        }
        Self {
            input,
            hidden,
            w: Param::new(format!("{prefix}.w"), w),
            u: Param::new(format!("{prefix}.u"), u),
            b: Param::new(format!("{prefix}.b"), b),
        }
    }

    /// All-zero parameters.
    pub fn zeros(prefix: &str, input: usize, hidden: usize) -> Self {
        let g = 4 * hidden;
        Self {
            input,
            hidden,
            w: Param::zeros(format!("{prefix}.w"), input, g),
            u: Param::zeros(format!("{prefix}.u"), hidden, g),
            b: Param::zeros(format!("{prefix}.b"), 1, g),
        }
    }

    /// Runs the sequence from `h_0 = c_0 = 0`.
    pub fn forward(&self, xs: &[Matrix<T>]) -> Result<LstmCache<T>> {
        let batch = xs.first().map_or(0, |x| x.rows());
        let h = self.hidden;
        let mut cache = LstmCache {
            gates: Vec::with_capacity(xs.len()),
            cells: vec![Matrix::zeros(batch, h)],
            hiddens: vec![Matrix::zeros(batch, h)],
        };
        for x in xs {
            if x.cols() != self.input || x.rows() != batch {
                return Err(Error::Dimension {
                    op: "lstm input",
                    left: x.shape(),
                    right: (batch, self.input),
                });
            }
            let h_prev = cache.hiddens.last().unwrap();
            let c_prev = cache.cells.last().unwrap();
            let mut z = x.matmul(&self.w.value)?;
            z.add_assign(&h_prev.matmul(&self.u.value)?)?;
            z.add_row_broadcast(&self.b.value)?;
            let mut c = Matrix::zeros(batch, h);
            let mut hn = Matrix::zeros(batch, h);
            for r in 0..batch {
                let zr = z.row_mut(r);
                for j in 0..h {
                    zr[j] = sigmoid(zr[j]);
                    zr[h + j] = sigmoid(zr[h + j]);
                    zr[2 * h + j] = zr[2 * h + j].tanh();
                    zr[3 * h + j] = sigmoid(zr[3 * h + j]);
                }
                let cp = c_prev.row(r);
                let cr = c.row_mut(r);
                for j in 0..h {
                    cr[j] = zr[h + j] * cp[j] + zr[j] * zr[2 * h + j];
                }
                let hr = hn.row_mut(r);
                for j in 0..h {
                    hr[j] = zr[3 * h + j] * cr[j].tanh();
                }
            }
            cache.gates.push(z);
            cache.cells.push(c);
            cache.hiddens.push(hn);
        }
        Ok(cache)
    }

    /// Backpropagation through time. `dhs[t]` is the loss gradient arriving at
    /// `h_{t+1}` from outside the recurrence. Returns the input gradients.
    pub fn backward(
        &mut self,
        xs: &[Matrix<T>],
        cache: &LstmCache<T>,
        dhs: &[Matrix<T>],
    ) -> Result<Vec<Matrix<T>>> {
        let steps = xs.len();
        if dhs.len() != steps || cache.gates.len() != steps {
            return Err(Error::Dimension {
                op: "lstm backward",
                left: (steps, 0),
                right: (dhs.len(), 0),
            });
        }
        let batch = xs.first().map_or(0, |x| x.rows());
        let h = self.hidden;
        let mut dxs = vec![Matrix::zeros(0, 0); steps];
        let mut dh_next: Matrix<T> = Matrix::zeros(batch, h);
        let mut dc_next: Matrix<T> = Matrix::zeros(batch, h);
        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let c = &cache.cells[t + 1];
            let c_prev = &cache.cells[t];
            let mut dz = Matrix::zeros(batch, 4 * h);
            for r in 0..batch {
                let gr = gates.row(r);
                let cr = c.row(r);
                let cpr = c_prev.row(r);
                let dhr = dhs[t].row(r);
                let dhn = dh_next.row(r);
                let dcn = dc_next.row_mut(r);
                let dzr = dz.row_mut(r);
                for j in 0..h {
                    let (i, f, g, o) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                    let dh = dhr[j] + dhn[j];
                    let tc = cr[j].tanh();
                    let d_o = dh * tc;
                    let dc = dh * o * (T::one() - tc * tc) + dcn[j];
                    let di = dc * g;
                    let dg = dc * i;
                    let df = dc * cpr[j];
                    dcn[j] = dc * f;
                    dzr[j] = di * i * (T::one() - i);
                    dzr[h + j] = df * f * (T::one() - f);
                    dzr[2 * h + j] = dg * (T::one() - g * g);
                    dzr[3 * h + j] = d_o * o * (T::one() - o);
                }
            }
            xs[t].matmul_tn_acc(&dz, &mut self.w.grad)?;
            cache.hiddens[t].matmul_tn_acc(&dz, &mut self.u.grad)?;
            dz.col_sums_acc(&mut self.b.grad)?;
            dxs[t] = dz.matmul_nt(&self.w.value)?;
            dh_next = dz.matmul_nt(&self.u.value)?;
        }
        Ok(dxs)
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }
}
