use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::network::{mean_loss, predict_network, Network};
use crate::error::{Error, Result};
use crate::features::SliceTensor;
use crate::metrics::micro_auc;
use crate::numcore::{adam_step, AdamConfig, RngStream};

pub const SHUFFLE_STREAM: u64 = 0x5348_5546;
pub const DROPOUT_STREAM: u64 = 0x4452_4F50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Absent when the validation split holds a single class.
    pub val_micro_auroc: Option<f64>,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean training loss of the untrained model.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainTrace {
    /// Validation score used for selection: micro-AUROC, or negated
    /// validation loss when AUROC is undefined.
    pub fn score(r: &EpochRecord) -> f64 {
        r.val_micro_auroc.unwrap_or(-r.val_loss)
    }
}

/// Mini-batch Adam on softmax cross-entropy. After every epoch the
/// validation split is scored; the earliest epoch with the highest score is
/// returned.
pub fn train_network<N: Network>(
    mut net: N,
    train: &SliceTensor,
    val: &SliceTensor,
    cfg: &TrainConfig,
) -> Result<(N, TrainTrace)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::Config("batch_size and max_epochs must be ≥ 1".into()));
    }
    net.check_input(train)?;
    net.check_input(val)?;
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut shuffle = RngStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut drop = RngStream::new(cfg.seed, DROPOUT_STREAM);
    let all: Vec<usize> = (0..train.n).collect();
    let val_rows: Vec<usize> = (0..val.n).collect();

    let mut trace = TrainTrace {
        initial_loss: mean_loss(&net, train, &all)?,
        ..Default::default()
    };
    let mut best: Option<(f64, N)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        let mut order = all.clone();
        shuffle.shuffle(&mut order);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            for p in net.params_mut() {
                p.zero_grad();
            }
            let loss = net.loss_and_grad(train, batch, Some(&mut drop))?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            total += loss * batch.len() as f64;
            for p in net.params_mut() {
                adam_step(p, &adam)?;
            }
        }
        let probs = predict_network(&net, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: total / train.n as f64,
            val_micro_auroc: micro_auc(&probs, &val.labels).ok(),
            val_loss: if val.is_empty() { 0.0 } else { mean_loss(&net, val, &val_rows)? },
        };
        let score = TrainTrace::score(&record);
        trace.epochs.push(record);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, net.clone()));
            trace.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                break;
            }
        }
    }
    let (_, snapshot) = best.expect("at least one epoch");
    Ok((snapshot, trace))
}
