use super::config::EmbedConfig;
use super::input::{labels_of, EmbeddingInput};
use super::network::Network;
use crate::error::{Error, Result};
use crate::features::SliceTensor;
use crate::numcore::{
    affine_backward, affine_forward, dropout, init, softmax_cross_entropy, DropoutMask, Lstm, Matrix, Param,
    RngStream,
};

/// Embedding input, one LSTM layer, and a dense head over `concat(h_1..h_T)`.
#[derive(Clone, Debug)]
pub struct LstmClassifier {
    pub config: EmbedConfig,
    pub input: EmbeddingInput,
    pub lstm: Lstm,
    /// `(T·H) × 2`
    pub head_w: Param,
    pub head_b: Param,
    pub input_dropout: f64,
}

impl LstmClassifier {
    pub fn new(config: EmbedConfig, input_dropout: f64, rng: &mut RngStream) -> Self {
        let input = EmbeddingInput::new(config.vocab, config.emb_dim, rng);
        let lstm = Lstm::new("lstm", config.step_width(), config.hidden, rng);
        let hw = config.head_width();
        Self {
            config,
            input,
            lstm,
            head_w: Param::new("head.w", init::glorot_uniform(hw, 2, hw, 2, rng)),
            head_b: Param::zeros("head.b", 1, 2),
            input_dropout,
        }
    }

    /// Every parameter zero.
    pub fn zeros(config: EmbedConfig) -> Self {
        Self {
            config,
            input: EmbeddingInput {
                emb: Param::zeros("embedding", config.vocab, config.emb_dim - 1),
                emb_dim: config.emb_dim,
            },
            lstm: Lstm::zeros("lstm", config.step_width(), config.hidden),
            head_w: Param::zeros("head.w", config.head_width(), 2),
            head_b: Param::zeros("head.b", 1, 2),
            input_dropout: 0.0,
        }
    }

    fn steps(&self, x: &SliceTensor, rows: &[usize]) -> Vec<Matrix> {
        (0..x.t).map(|s| self.input.step(x, rows, s)).collect()
    }

    /// Head input `concat(h_1..h_T)` without dropout, `B × T·H`.
    pub fn hidden_states(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        let cache = self.lstm.forward(&self.steps(x, rows))?;
        Matrix::hcat(cache.outputs())
    }
}

impl Network for LstmClassifier {
    fn check_input(&self, x: &SliceTensor) -> Result<()> {
        self.input.check(x)?;
        if x.t != self.config.steps {
            return Err(Error::Dimension {
                op: "lstm window",
                left: (x.n, x.t),
                right: (self.config.steps, self.config.hidden),
            });
        }
        Ok(())
    }

    fn logits(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        affine_forward(&self.hidden_states(x, rows)?, &self.head_w, &self.head_b)
    }

    fn loss_and_grad(&mut self, x: &SliceTensor, rows: &[usize], mut rng: Option<&mut RngStream>) -> Result<f64> {
        let mut xs = Vec::with_capacity(x.t);
        let mut masks = Vec::with_capacity(x.t);
        for step in self.steps(x, rows) {
            let (d, m) = match rng.as_deref_mut() {
                Some(r) => dropout(&step, self.input_dropout, r, true)?,
                None => (step, DropoutMask::Identity),
            };
            xs.push(d);
            masks.push(m);
        }
        let cache = self.lstm.forward(&xs)?;
        let hcat = Matrix::hcat(cache.outputs())?;
        let logits = affine_forward(&hcat, &self.head_w, &self.head_b)?;
        let (loss, dl) = softmax_cross_entropy(&logits, &labels_of(x, rows))?;
        let dh = affine_backward(&hcat, &mut self.head_w, &mut self.head_b, &dl)?;
        let h = self.config.hidden;
        let dhs: Vec<Matrix> = (0..x.t).map(|t| dh.col_block(t * h, h)).collect();
        let dxs = self.lstm.backward(&xs, &cache, &dhs)?;
        for (dx, m) in dxs.iter().zip(&masks) {
            self.input.backward(&m.apply(dx));
        }
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        vec![
            &self.input.emb,
            &self.lstm.w,
            &self.lstm.u,
            &self.lstm.b,
            &self.head_w,
            &self.head_b,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let [w, u, b] = self.lstm.params_mut();
        vec![&mut self.input.emb, w, u, b, &mut self.head_w, &mut self.head_b]
    }
}
