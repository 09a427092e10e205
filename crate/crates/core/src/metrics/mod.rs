//! ROC / PR machinery with exact tie handling, micro-averaged variants over
//! two-class probability tables, and multi-run summaries.

mod pr;
mod roc;

pub use pr::{auc_pr, average_precision, pr_curve, recall_at, PrPoint};
pub use roc::{auc_roc, micro_auc, ScoredSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Hard-decision threshold used throughout.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Test-set metrics for one fitted model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub micro_auroc: f64,
    pub micro_aucpr: f64,
    pub micro_ap: f64,
    /// Positive-class AUROC, reported alongside the micro average.
    pub auroc: f64,
    pub aucpr: f64,
    pub recall: f64,
}

impl EvalMetrics {
    pub const NAMES: [&'static str; 6] = ["micro_auroc", "micro_aucpr", "micro_ap", "auroc", "aucpr", "recall"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.micro_auroc,
            self.micro_aucpr,
            self.micro_ap,
            self.auroc,
            self.aucpr,
            self.recall,
        ]
    }
}

/// Evaluates a probability table against 0/1 labels.
pub fn evaluate(probs: &[[f64; 2]], labels: &[u8]) -> Result<EvalMetrics> {
    let micro = ScoredSet::micro(probs, labels);
    let pos: Vec<f64> = probs.iter().map(|p| p[1]).collect();
    let plain = ScoredSet::from_u8(&pos, labels);
    Ok(EvalMetrics {
        micro_auroc: auc_roc(&micro)?,
        micro_aucpr: auc_pr(&micro)?,
        micro_ap: average_precision(&micro)?,
        auroc: auc_roc(&plain)?,
        aucpr: auc_pr(&plain)?,
        recall: recall_at(&plain, DECISION_THRESHOLD)?,
    })
}

/// Mean and sample standard deviation over `k` runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    /// Absent when fewer than two runs.
    pub std: Option<f64>,
    pub runs: usize,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.4} ± {:.4}", self.mean, s),
            None => write!(f, "{:.4}", self.mean),
        }
    }
}

pub fn summarize_runs(values: &[f64]) -> RunSummary {
    let k = values.len();
    let mean = if k == 0 {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / k as f64
    };
    let std = (k >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (k - 1) as f64).sqrt()
    });
    RunSummary { mean, std, runs: k }
}
