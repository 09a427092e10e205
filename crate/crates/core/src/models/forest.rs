use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::micro_auc;
use crate::numcore::rng::mix;
use crate::numcore::{Matrix, RngStream};

/// Node of a fitted tree. Leaves have `feature == None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Fraction of class 1 among training samples reaching the node.
    pub positive_fraction: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Class-1 leaf fraction for one row.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            let n = &self.nodes[k];
            match n.feature {
                None => return n.positive_fraction,
                Some(f) => k = if x[f] <= n.threshold { n.left } else { n.right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, k: usize) -> usize {
            let n = &t.nodes[k];
            match n.feature {
                None => 0,
                Some(_) => 1 + go(t, n.left).max(go(t, n.right)),
            }
        }
        go(self, 0)
    }
}

/// Settings for one CART tree.
#[derive(Clone, Copy, Debug)]
pub struct TreeParams {
    /// Features drawn per split.
    pub max_features: usize,
    pub bootstrap: bool,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    params: TreeParams,
    rng: RngStream,
    nodes: Vec<TreeNode>,
    /// Weighted impurity decrease per feature.
    importance: Vec<f64>,
    total: usize,
}

impl Grower<'_> {
    fn leaf(&mut self, pos: usize, n: usize) -> usize {
        self.nodes.push(TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            positive_fraction: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
            samples: n,
        });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, gain)` over features drawn without
    /// replacement until `max_features` non-constant ones were scored.
    fn best_split(&mut self, idx: &[usize], pos: usize) -> Option<(usize, f64, f64)> {
        let f_total = self.x.cols();
        let mut order: Vec<usize> = (0..f_total).collect();
        self.rng.shuffle(&mut order);
        let n = idx.len();
        let parent = gini(pos, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut scored = 0;
        let mut vals: Vec<(f64, u8)> = Vec::with_capacity(n);
        for f in order {
            if scored >= self.params.max_features {
                break;
            }
            vals.clear();
            vals.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            if vals[0].0 == vals[n - 1].0 {
                continue;
            }
            scored += 1;
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += vals[k - 1].1 as usize;
                if vals[k].0 == vals[k - 1].0 {
                    continue;
                }
                let (nl, nr) = (k, n - k);
                let child = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / n as f64;
                let gain = parent - child;
                if best.is_none_or(|b| gain > b.2) {
                    best = Some((f, 0.5 * (vals[k - 1].0 + vals[k].0), gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        if n < 2 || pos == 0 || pos == n {
            return self.leaf(pos, n);
        }
        let Some((f, thr, gain)) = self.best_split(&idx, pos) else {
            return self.leaf(pos, n);
        };
        self.importance[f] += gain * n as f64 / self.total as f64;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x.get(i, f) <= thr);
        let me = self.leaf(pos, n);
        self.nodes[me].feature = Some(f);
        self.nodes[me].threshold = thr;
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[me].left = left;
        self.nodes[me].right = right;
        me
    }
}

/// Grows one CART tree with Gini impurity until leaves are pure or hold
/// fewer than two samples. Returns the tree and its per-feature impurity
/// decrease.
pub fn fit_tree(x: &Matrix, y: &[u8], params: TreeParams, rng: RngStream) -> (DecisionTree, Vec<f64>) {
    let n = x.rows();
    let mut g = Grower {
        x,
        y,
        params,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; x.cols()],
        total: n,
    };
    let idx: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| g.rng.below(n)).collect()
    } else {
        (0..n).collect()
    };
    g.grow(idx);
    (DecisionTree { nodes: g.nodes }, g.importance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub seed: u64,
    /// Per tree, impurity decrease per feature normalized to sum to 1.
    pub tree_importances: Vec<Vec<f64>>,
}

const TREE_STREAM: u64 = 0x5452_4545;

impl RandomForest {
    /// Bootstrapped trees with `√F` features per split. Tree `k` draws from
    /// its own stream, so a forest is a prefix of any larger forest with the
    /// same seed.
    pub fn fit(x: &Matrix, y: &[u8], n_trees: usize, seed: u64) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if y.iter().any(|&l| l > 1) {
            let row = y.iter().position(|&l| l > 1).unwrap_or(0);
            return Err(Error::InvalidLabel { row, label: y[row] as usize });
        }
        let params = TreeParams {
            max_features: ((x.cols() as f64).sqrt().floor() as usize).max(1),
            bootstrap: true,
        };
        let fitted: Vec<(DecisionTree, Vec<f64>)> = (0..n_trees)
            .into_par_iter()
            .map(|k| fit_tree(x, y, params, RngStream::new(seed, mix(TREE_STREAM, k as u64))))
            .collect();
        let (trees, raw): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
        let tree_importances = raw
            .into_iter()
            .map(|imp| {
                let s: f64 = imp.iter().sum();
                if s > 0.0 {
                    imp.iter().map(|v| v / s).collect()
                } else {
                    imp
                }
            })
            .collect();
        Ok(Self {
            trees,
            n_features: x.cols(),
            seed,
            tree_importances,
        })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// The first `k` trees.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            trees: self.trees[..k].to_vec(),
            tree_importances: self.tree_importances[..k].to_vec(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Self {
            trees: Vec::new(),
            n_features: self.n_features,
            seed: self.seed,
            tree_importances: Vec::new(),
        }
    }

    /// Unweighted mean of the trees' leaf fractions.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<[f64; 2]>> {
        if x.cols() != self.n_features {
            return Err(Error::Dimension {
                op: "forest input",
                left: x.shape(),
                right: (self.n_features, self.trees.len()),
            });
        }
        let k = self.trees.len() as f64;
        Ok((0..x.rows())
            .map(|r| {
                let row = x.row(r);
                let p = self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k;
                [1.0 - p, p]
            })
            .collect())
    }

    /// Mean impurity decrease per feature, averaged over trees.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for imp in &self.tree_importances {
            for (o, v) in out.iter_mut().zip(imp) {
                *o += v;
            }
        }
        let k = self.tree_importances.len().max(1) as f64;
        out.iter_mut().for_each(|v| *v /= k);
        out
    }
}

/// One grid point of the estimator sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_estimators: usize,
    pub validation_micro_auroc: f64,
}

/// Fits the largest grid forest, scores each grid prefix on validation
/// micro-AUROC, and keeps the best (smallest on ties).
pub fn fit_forest_sweep(
    train_x: &Matrix,
    train_y: &[u8],
    val_x: &Matrix,
    val_y: &[u8],
    grid: &[usize],
    seed: u64,
) -> Result<(RandomForest, Vec<SweepPoint>)> {
    let mut grid: Vec<usize> = grid.iter().copied().filter(|&g| g > 0).collect();
    grid.sort_unstable();
    grid.dedup();
    let Some(&largest) = grid.last() else {
        return Err(Error::Config("empty estimator grid".into()));
    };
    let full = RandomForest::fit(train_x, train_y, largest, seed)?;
    let mut sweep = Vec::with_capacity(grid.len());
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &g in &grid {
        let probs = full.truncated(g).predict_proba(val_x)?;
        let auc = micro_auc(&probs, val_y)?;
        sweep.push(SweepPoint {
            n_estimators: g,
            validation_micro_auroc: auc,
        });
        if auc > best.1 {
            best = (g, auc);
        }
    }
    Ok((full.truncated(best.0), sweep))
}
