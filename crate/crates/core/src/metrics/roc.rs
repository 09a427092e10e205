use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Scores paired with binary labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Self {
        assert_eq!(scores.len(), labels.len(), "scores/labels length");
        Self { scores, labels }
    }

    pub fn from_u8(scores: &[f64], labels: &[u8]) -> Self {
        Self::new(scores.to_vec(), labels.iter().map(|&l| l == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Flattens an `N × 2` probability table into `2N` one-vs-rest decisions:
    /// for every sample and class `c`, score `prob[c]` with indicator
    /// `label == c`.
    pub fn micro(probs: &[[f64; 2]], labels: &[u8]) -> Self {
        assert_eq!(probs.len(), labels.len(), "probs/labels length");
        let mut scores = Vec::with_capacity(2 * probs.len());
        let mut flags = Vec::with_capacity(2 * probs.len());
        for (p, &l) in probs.iter().zip(labels) {
            for (c, &pc) in p.iter().enumerate() {
                scores.push(pc);
                flags.push(l as usize == c);
            }
        }
        Self::new(scores, flags)
    }
}

/// One group of tied scores, in descending score order.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TieGroup {
    pub tp: u64,
    pub fp: u64,
}

/// Groups samples by identical score, highest score first.
pub(crate) fn tie_groups(s: &ScoredSet) -> Vec<TieGroup> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| {
        s.scores[b]
            .partial_cmp(&s.scores[a])
            .unwrap_or(Ordering::Equal)
    });
    let mut groups: Vec<TieGroup> = Vec::new();
    let mut last: Option<f64> = None;
    for i in order {
        let (tp, fp) = if s.labels[i] { (1, 0) } else { (0, 1) };
        match (last, groups.last_mut()) {
            (Some(prev), Some(g)) if prev == s.scores[i] => {
                g.tp += tp;
                g.fp += fp;
            }
            _ => groups.push(TieGroup { tp, fp }),
        }
        last = Some(s.scores[i]);
    }
    groups
}

/// Area under the ROC curve by a descending sweep over tie groups with
/// trapezoidal area; equals `(concordant + ½·tied) / (P·N)`.
pub fn auc_roc(s: &ScoredSet) -> Result<f64> {
    let pos = s.positives() as u64;
    let neg = s.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("auc_roc needs both classes"));
    }
    // twice the area, kept in integers: Σ fp_g · (2·tp_before + tp_g)
    let mut tp_before = 0u64;
    let mut twice_area = 0u128;
    for g in tie_groups(s) {
        twice_area += g.fp as u128 * (2 * tp_before + g.tp) as u128;
        tp_before += g.tp;
    }
    Ok(twice_area as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Micro-averaged AUROC of a two-class probability table.
pub fn micro_auc(probs: &[[f64; 2]], labels: &[u8]) -> Result<f64> {
    auc_roc(&ScoredSet::micro(probs, labels))
}
