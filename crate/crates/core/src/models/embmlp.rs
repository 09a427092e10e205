use super::config::EmbedConfig;
use super::dense::DenseStack;
use super::input::{labels_of, EmbeddingInput};
use super::network::Network;
use crate::error::{Error, Result};
use crate::features::SliceTensor;
use crate::numcore::{dropout, softmax_cross_entropy, DropoutMask, Matrix, Param, RngStream};

/// The LSTM classifier's input construction with the recurrence replaced by
/// two relu layers over `concat(x_1..x_T)`.
#[derive(Clone, Debug)]
pub struct EmbMlp {
    pub config: EmbedConfig,
    pub input: EmbeddingInput,
    pub stack: DenseStack,
    pub input_dropout: f64,
}

impl EmbMlp {
    pub fn new(config: EmbedConfig, hidden: usize, input_dropout: f64, rng: &mut RngStream) -> Self {
        let input = EmbeddingInput::new(config.vocab, config.emb_dim, rng);
        let width = config.steps * config.step_width();
        Self {
            config,
            input,
            stack: DenseStack::new("embmlp", width, &[hidden, hidden], &[0.0, 0.0], rng),
            input_dropout,
        }
    }

    fn concat(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        let steps: Vec<Matrix> = (0..x.t).map(|s| self.input.step(x, rows, s)).collect();
        Matrix::hcat(&steps)
    }
}

impl Network for EmbMlp {
    fn check_input(&self, x: &SliceTensor) -> Result<()> {
        self.input.check(x)?;
        if x.t != self.config.steps {
            return Err(Error::Dimension {
                op: "embmlp window",
                left: (x.n, x.t),
                right: (self.config.steps, 0),
            });
        }
        Ok(())
    }

    fn logits(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        self.stack.forward(&self.concat(x, rows)?)
    }

    fn loss_and_grad(&mut self, x: &SliceTensor, rows: &[usize], mut rng: Option<&mut RngStream>) -> Result<f64> {
        let cat = self.concat(x, rows)?;
        let (cat, mask) = match rng.as_deref_mut() {
            Some(r) => dropout(&cat, self.input_dropout, r, true)?,
            None => (cat, DropoutMask::Identity),
        };
        let (logits, cache) = self.stack.forward_train(cat, rng)?;
        let (loss, dl) = softmax_cross_entropy(&logits, &labels_of(x, rows))?;
        let dcat = mask.apply(&self.stack.backward(&cache, &dl)?);
        let w = self.config.step_width();
        for s in 0..x.t {
            self.input.backward(&dcat.col_block(s * w, w));
        }
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.input.emb];
        v.extend(self.stack.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.input.emb];
        v.extend(self.stack.params_mut());
        v
    }
}
