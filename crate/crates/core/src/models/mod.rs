//! The embedding+LSTM classifier, its baselines, and a uniform
//! fit / predict surface.
//!
//! Tabular kinds (`lr`, `mlp`, `rf`) see the flattened `T·V + 12` table;
//! sequence kinds (`lstm`, `embmlp`, `cnn`) see per-slice inputs built from
//! learned concept embeddings with the slice count appended to each.

mod cnn;
mod config;
mod dense;
mod embmlp;
mod forest;
mod input;
mod lstm;
mod network;
mod train;

pub use cnn::CnnClassifier;
pub use config::{EmbedConfig, ModelConfig, ModelKind, TrainConfig};
pub use dense::{DenseStack, TabularNet};
pub use embmlp::EmbMlp;
pub use forest::{fit_forest_sweep, fit_tree, DecisionTree, RandomForest, SweepPoint, TreeNode, TreeParams};
pub use input::{tabular_batch, EmbeddingInput};
pub use lstm::LstmClassifier;
pub use network::{mean_loss, predict_network, BatchObjective, Network, PREDICT_BATCH};
pub use train::{train_network, EpochRecord, TrainTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{flatten_for_tabular, ObservationWindow, SliceTensor, DEMO_WIDTH};
use crate::numcore::{Param, RngStream};

pub const INIT_STREAM: u64 = 0x494E_4954;

/// The tensor layout a fitted model accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub vocab: usize,
    pub steps: usize,
    pub window: ObservationWindow,
    pub aggregated: bool,
    pub binarized: bool,
    pub concepts: Vec<String>,
}

impl InputSpec {
    pub fn of(x: &SliceTensor) -> Self {
        Self {
            vocab: x.v,
            steps: x.t,
            window: x.window,
            aggregated: x.aggregated,
            binarized: x.binarized,
            concepts: x.vocabulary.concepts.iter().map(|c| c.code.clone()).collect(),
        }
    }

    pub fn check(&self, x: &SliceTensor) -> Result<()> {
        if x.v != self.vocab || x.t != self.steps || x.aggregated != self.aggregated {
            return Err(Error::Dimension {
                op: "model input",
                left: (x.t, x.v),
                right: (self.steps, self.vocab),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum Model {
    Lr(TabularNet),
    Mlp(TabularNet),
    Rf(RandomForest),
    Cnn(CnnClassifier),
    Lstm(LstmClassifier),
    EmbMlp(EmbMlp),
}

macro_rules! with_network {
    ($model:expr, $net:ident => $body:expr, $forest:ident => $fbody:expr) => {
        match $model {
            Model::Lr($net) | Model::Mlp($net) => $body,
            Model::Cnn($net) => $body,
            Model::Lstm($net) => $body,
            Model::EmbMlp($net) => $body,
            Model::Rf($forest) => $fbody,
        }
    };
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lr(_) => ModelKind::Lr,
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Rf(_) => ModelKind::Rf,
            Model::Cnn(_) => ModelKind::Cnn,
            Model::Lstm(_) => ModelKind::Lstm,
            Model::EmbMlp(_) => ModelKind::EmbMlp,
        }
    }

    /// Freshly initialized network for `x`'s shape.
    pub fn init(kind: ModelKind, x: &SliceTensor, cfg: &ModelConfig, seed: u64) -> Result<Self> {
        Self::build(kind, x.v, x.t, cfg, seed)
    }

    /// Freshly initialized network for `steps` slices of `vocab` concepts.
    pub fn build(kind: ModelKind, vocab: usize, steps: usize, cfg: &ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed, INIT_STREAM);
        let tabular = steps * vocab + DEMO_WIDTH;
        let embed = || EmbedConfig::new(cfg.emb_dim, vocab, cfg.hidden, steps);
        Ok(match kind {
            ModelKind::Lr => Model::Lr(TabularNet::logistic(tabular, &mut rng)),
            ModelKind::Mlp => Model::Mlp(TabularNet::mlp(tabular, &cfg.mlp_hidden, &cfg.mlp_dropout, &mut rng)),
            ModelKind::Lstm => Model::Lstm(LstmClassifier::new(embed()?, cfg.input_dropout, &mut rng)),
            ModelKind::EmbMlp => Model::EmbMlp(EmbMlp::new(embed()?, cfg.emb_mlp_hidden, cfg.input_dropout, &mut rng)),
            ModelKind::Cnn => Model::Cnn(CnnClassifier::new(
                vocab,
                cfg.emb_dim,
                steps,
                &cfg.cnn_widths,
                cfg.cnn_channels,
                &mut rng,
            )?),
            ModelKind::Rf => Model::Rf(RandomForest {
                trees: Vec::new(),
                n_features: tabular,
                seed,
                tree_importances: Vec::new(),
            }),
        })
    }

    /// Trainable parameters in checkpoint order; empty for the forest.
    pub fn params(&self) -> Vec<&Param> {
        with_network!(self, n => n.params(), _f => Vec::new())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        with_network!(self, n => n.params_mut(), _f => Vec::new())
    }

    pub fn predict_proba(&self, x: &SliceTensor) -> Result<Vec<[f64; 2]>> {
        with_network!(self, n => predict_network(n, x), f => f.predict_proba(&flatten_for_tabular(x)))
    }
}

/// A trained model with everything needed to score new tensors.
#[derive(Clone, Debug)]
pub struct FittedModel {
    pub model: Model,
    pub input: InputSpec,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    /// Absent after loading a checkpoint.
    pub trace: Option<TrainTrace>,
    pub best_epoch: Option<usize>,
    pub sweep: Vec<SweepPoint>,
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn predict_proba(&self, x: &SliceTensor) -> Result<Vec<[f64; 2]>> {
        self.input.check(x)?;
        self.model.predict_proba(x)
    }
}

/// Fits one model kind. Neural kinds train with [`train_network`]; the
/// forest sweeps `rf_grid` on validation micro-AUROC.
pub fn fit_model(
    kind: ModelKind,
    train: &SliceTensor,
    val: &SliceTensor,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<FittedModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let init = Model::init(kind, train, model_config, train_config.seed)?;
    let mut trace = None;
    let mut sweep = Vec::new();
    let model = match init {
        Model::Lr(n) => fit_net(n, train, val, train_config, &mut trace, Model::Lr)?,
        Model::Mlp(n) => fit_net(n, train, val, train_config, &mut trace, Model::Mlp)?,
        Model::Cnn(n) => fit_net(n, train, val, train_config, &mut trace, Model::Cnn)?,
        Model::Lstm(n) => fit_net(n, train, val, train_config, &mut trace, Model::Lstm)?,
        Model::EmbMlp(n) => fit_net(n, train, val, train_config, &mut trace, Model::EmbMlp)?,
        Model::Rf(_) => {
            let (forest, s) = fit_forest_sweep(
                &flatten_for_tabular(train),
                &train.labels,
                &flatten_for_tabular(val),
                &val.labels,
                &model_config.rf_grid,
                train_config.seed,
            )?;
            sweep = s;
            Model::Rf(forest)
        }
    };
    Ok(FittedModel {
        model,
        input: InputSpec::of(train),
        model_config: model_config.clone(),
        train_config: train_config.clone(),
        best_epoch: trace.as_ref().map(|t: &TrainTrace| t.best_epoch),
        trace,
        sweep,
    })
}

fn fit_net<N: Network>(
    net: N,
    train: &SliceTensor,
    val: &SliceTensor,
    cfg: &TrainConfig,
    trace: &mut Option<TrainTrace>,
    wrap: fn(N) -> Model,
) -> Result<Model> {
    let (fitted, t) = train_network(net, train, val, cfg)?;
    *trace = Some(t);
    Ok(wrap(fitted))
}
