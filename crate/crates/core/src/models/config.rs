use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DEMO_WIDTH;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Mlp,
    Rf,
    Cnn,
    Lstm,
    EmbMlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lr,
        ModelKind::Mlp,
        ModelKind::Rf,
        ModelKind::Cnn,
        ModelKind::Lstm,
        ModelKind::EmbMlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
            ModelKind::Rf => "rf",
            ModelKind::Cnn => "cnn",
            ModelKind::Lstm => "lstm",
            ModelKind::EmbMlp => "embmlp",
        }
    }

    /// Consumes the flattened `N × (T·V + 12)` table.
    pub fn is_tabular(self) -> bool {
        matches!(self, ModelKind::Lr | ModelKind::Mlp | ModelKind::Rf)
    }

    pub fn is_neural(self) -> bool {
        self != ModelKind::Rf
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Embedding width (including the frequency slot), vocabulary size, hidden
/// width and slice count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub emb_dim: usize,
    pub vocab: usize,
    pub hidden: usize,
    pub steps: usize,
}

impl EmbedConfig {
    pub fn new(emb_dim: usize, vocab: usize, hidden: usize, steps: usize) -> Result<Self> {
        if emb_dim < 2 {
            return Err(Error::Config(format!("emb_dim {emb_dim} < 2")));
        }
        if steps == 0 {
            return Err(Error::Config("steps must be ≥ 1".into()));
        }
        Ok(Self {
            emb_dim,
            vocab,
            hidden,
            steps,
        })
    }

    /// `12 + V·D_emb`.
    pub fn step_width(&self) -> usize {
        DEMO_WIDTH + self.vocab * self.emb_dim
    }

    /// `T·H`.
    pub fn head_width(&self) -> usize {
        self.steps * self.hidden
    }
}

/// Architecture hyperparameters for every model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub emb_dim: usize,
    pub hidden: usize,
    pub input_dropout: f64,
    pub mlp_hidden: [usize; 2],
    pub mlp_dropout: [f64; 2],
    /// Hidden width of both embedding-MLP layers.
    pub emb_mlp_hidden: usize,
    pub cnn_widths: Vec<usize>,
    pub cnn_channels: usize,
    pub rf_grid: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            emb_dim: 32,
            hidden: 128,
            input_dropout: 0.2,
            mlp_hidden: [256, 256],
            mlp_dropout: [0.15, 0.10],
            emb_mlp_hidden: 128,
            cnn_widths: vec![4, 8, 16, 32, 64],
            cnn_channels: 32,
            rf_grid: vec![50, 100, 200, 400],
        }
    }
}

/// Optimizer and selection settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a new best validation score.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            learning_rate: 1e-3,
            max_epochs: 100,
            seed: 1,
            patience: None,
        }
    }
}
