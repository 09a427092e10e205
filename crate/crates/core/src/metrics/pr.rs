use super::roc::{tie_groups, ScoredSet};
use crate::error::{Error, Result};

/// One operating point per tie group, highest threshold first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision–recall points from a descending-score sweep with tie grouping.
pub fn pr_curve(s: &ScoredSet) -> Result<Vec<PrPoint>> {
    let pos = s.positives() as u64;
    if pos == 0 {
        return Err(Error::UndefinedMetric("precision-recall needs a positive"));
    }
    let mut tp = 0u64;
    let mut seen = 0u64;
    Ok(tie_groups(s)
        .into_iter()
        .map(|g| {
            tp += g.tp;
            seen += g.tp + g.fp;
            PrPoint {
                recall: tp as f64 / pos as f64,
                precision: tp as f64 / seen as f64,
            }
        })
        .collect())
}

/// Trapezoidal area under the PR curve, anchored at
/// `(recall = 0, precision = precision of the top score group)`.
pub fn auc_pr(s: &ScoredSet) -> Result<f64> {
    let pts = pr_curve(s)?;
    let mut prev = PrPoint {
        recall: 0.0,
        precision: pts[0].precision,
    };
    let mut area = 0.0;
    for p in pts {
        area += (p.recall - prev.recall) * (p.precision + prev.precision) / 2.0;
        prev = p;
    }
    Ok(area)
}

/// Step-sum average precision, `Σ (R_i − R_{i−1})·P_i`.
pub fn average_precision(s: &ScoredSet) -> Result<f64> {
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for p in pr_curve(s)? {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    Ok(ap)
}

/// Fraction of positives scored at or above `threshold`.
pub fn recall_at(s: &ScoredSet, threshold: f64) -> Result<f64> {
    let pos = s.positives();
    if pos == 0 {
        return Err(Error::UndefinedMetric("recall needs a positive"));
    }
    let hit = s
        .scores
        .iter()
        .zip(&s.labels)
        .filter(|(&sc, &l)| l && sc >= threshold)
        .count();
    Ok(hit as f64 / pos as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranked_example_ap() {
        let s = ScoredSet::from_u8(&[0.9, 0.8, 0.7], &[1, 0, 1]);
        let ap = average_precision(&s).unwrap();
        assert!((ap - 0.5 * (1.0 + 2.0 / 3.0)).abs() < 1e-15);
        assert!((ap - 0.833_333_333_333).abs() < 1e-9);
    }

    #[test]
    fn perfect_ranker() {
        let s = ScoredSet::from_u8(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]);
        assert_eq!(average_precision(&s).unwrap(), 1.0);
        assert_eq!(auc_pr(&s).unwrap(), 1.0);
    }

    #[test]
    fn recall_threshold() {
        let s = ScoredSet::from_u8(&[0.6, 0.4], &[1, 1]);
        assert_eq!(recall_at(&s, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn no_positives_undefined() {
        let s = ScoredSet::from_u8(&[0.6, 0.4], &[0, 0]);
        assert!(average_precision(&s).is_err());
        assert!(auc_pr(&s).is_err());
        assert!(recall_at(&s, 0.5).is_err());
    }
}
