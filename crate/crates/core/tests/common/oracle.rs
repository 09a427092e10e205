//! Exhaustive definitions, written without sweeps or tie grouping.

use seqrisk::numcore::RngStream;

/// `(concordant + ½·tied) / (P·N)` over every positive/negative pair.
pub fn pairwise_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// One vs rest over both classes, flattened to `2N` decisions.
pub fn flatten_micro(probs: &[[f64; 2]], labels: &[u8]) -> (Vec<f64>, Vec<bool>) {
    let mut s = Vec::new();
    let mut l = Vec::new();
    for (p, &y) in probs.iter().zip(labels) {
        for c in 0..2 {
            s.push(p[c]);
            l.push(y as usize == c);
        }
    }
    (s, l)
}

/// `(recall, precision)` at every distinct threshold, highest first, each
/// counted from scratch.
pub fn threshold_points(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let mut th: Vec<f64> = scores.to_vec();
    th.sort_by(|a, b| b.partial_cmp(a).unwrap());
    th.dedup();
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    th.iter()
        .map(|&t| {
            let sel: Vec<bool> = scores.iter().zip(labels).filter(|(&s, _)| s >= t).map(|(_, &l)| l).collect();
            let tp = sel.iter().filter(|&&l| l).count() as f64;
            (tp / pos, tp / sel.len() as f64)
        })
        .collect()
}

pub fn trapezoid_aucpr(scores: &[f64], labels: &[bool]) -> f64 {
    let pts = threshold_points(scores, labels);
    let (mut r0, mut p0) = (0.0, pts[0].1);
    let mut a = 0.0;
    for (r, p) in pts {
        a += (r - r0) * (p + p0) / 2.0;
        r0 = r;
        p0 = p;
    }
    a
}

pub fn step_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let mut r0 = 0.0;
    let mut a = 0.0;
    for (r, p) in threshold_points(scores, labels) {
        a += (r - r0) * p;
        r0 = r;
    }
    a
}

/// Instance `k`: even `k` draws scores from five levels and repeats one.
pub fn instance(rng: &mut RngStream, k: usize) -> (Vec<f64>, Vec<bool>) {
    let n = 2 + rng.below(49);
    let tied = k.is_multiple_of(2);
    let mut scores: Vec<f64> = (0..n)
        .map(|_| if tied { rng.below(5) as f64 / 4.0 } else { rng.uniform() })
        .collect();
    if tied {
        scores[n - 1] = scores[0];
    }
    let mut labels: Vec<bool> = (0..n).map(|_| rng.below(2) == 1).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}
