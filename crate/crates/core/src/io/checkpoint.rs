use serde::{Deserialize, Serialize};

use super::container::{read_container, write_container};
use crate::error::{Error, Result};
use crate::models::{
    DecisionTree, EmbedConfig, FittedModel, InputSpec, Model, ModelConfig, ModelKind, RandomForest, SweepPoint,
    TrainConfig, TreeNode,
};

pub const CHECKPOINT_SCHEMA: &str = "seqrisk.checkpoint/1";
/// f64 slots per serialized tree node.
pub const NODE_WIDTH: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestLayout {
    pub n_features: usize,
    pub seed: u64,
    /// Node count per tree.
    pub tree_nodes: Vec<usize>,
}

/// Metadata document. The value blob holds, in order: every parameter in
/// `params` order, row-major; or for a forest, every node as
/// `[feature or −1, threshold, left, right, positive_fraction, samples]`
/// tree by tree, then each tree's `n_features` importances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub schema: String,
    pub kind: ModelKind,
    pub input: InputSpec,
    pub embed: Option<EmbedConfig>,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub best_epoch: Option<usize>,
    pub params: Vec<ParamLayout>,
    pub forest: Option<ForestLayout>,
    pub sweep: Vec<SweepPoint>,
}

pub fn encode_checkpoint(m: &FittedModel) -> Result<Vec<u8>> {
    let mut blob = Vec::new();
    let mut params = Vec::new();
    for p in m.model.params() {
        let (rows, cols) = p.shape();
        params.push(ParamLayout {
            name: p.name.clone(),
            rows,
            cols,
        });
        blob.extend_from_slice(p.value.data());
    }
    let forest = match &m.model {
        Model::Rf(f) => {
            for t in &f.trees {
                for n in &t.nodes {
                    blob.extend_from_slice(&[
                        n.feature.map_or(-1.0, |x| x as f64),
                        n.threshold,
                        n.left as f64,
                        n.right as f64,
                        n.positive_fraction,
                        n.samples as f64,
                    ]);
                }
            }
            for imp in &f.tree_importances {
                blob.extend_from_slice(imp);
            }
            Some(ForestLayout {
                n_features: f.n_features,
                seed: f.seed,
                tree_nodes: f.trees.iter().map(|t| t.nodes.len()).collect(),
            })
        }
        _ => None,
    };
    let embed = match &m.model {
        Model::Lstm(n) => Some(n.config),
        Model::EmbMlp(n) => Some(n.config),
        _ => None,
    };
    let meta = CheckpointMeta {
        schema: CHECKPOINT_SCHEMA.into(),
        kind: m.kind(),
        input: m.input.clone(),
        embed,
        model_config: m.model_config.clone(),
        train_config: m.train_config.clone(),
        best_epoch: m.best_epoch,
        params,
        forest,
        sweep: m.sweep.clone(),
    };
    write_container(&meta, &blob)
}

fn index(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Schema(format!("invalid {what} {v} in checkpoint")))
    }
}

fn decode_forest(layout: &ForestLayout, blob: &[f64]) -> Result<RandomForest> {
    let nodes: usize = layout.tree_nodes.iter().sum();
    let expect = nodes * NODE_WIDTH + layout.tree_nodes.len() * layout.n_features;
    if blob.len() != expect {
        return Err(Error::Schema(format!("forest blob has {} values, expected {expect}", blob.len())));
    }
    let mut at = 0;
    let mut trees = Vec::with_capacity(layout.tree_nodes.len());
    for &count in &layout.tree_nodes {
        let mut t = Vec::with_capacity(count);
        for _ in 0..count {
            let r = &blob[at..at + NODE_WIDTH];
            at += NODE_WIDTH;
            let feature = if r[0] == -1.0 { None } else { Some(index(r[0], "feature")?) };
            let node = TreeNode {
                feature,
                threshold: r[1],
                left: index(r[2], "child")?,
                right: index(r[3], "child")?,
                positive_fraction: r[4],
                samples: index(r[5], "sample count")?,
            };
            if feature.is_some_and(|f| f >= layout.n_features) || (feature.is_some() && (node.left >= count || node.right >= count)) {
                return Err(Error::Schema("tree node out of range in checkpoint".into()));
            }
            t.push(node);
        }
        trees.push(DecisionTree { nodes: t });
    }
    let tree_importances = blob[at..].chunks(layout.n_features.max(1)).map(<[f64]>::to_vec).collect();
    Ok(RandomForest {
        trees,
        n_features: layout.n_features,
        seed: layout.seed,
        tree_importances,
    })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FittedModel> {
    let (meta, blob): (CheckpointMeta, Vec<f64>) = read_container(bytes)?;
    if meta.schema != CHECKPOINT_SCHEMA {
        return Err(Error::Schema(format!("unsupported checkpoint schema `{}`", meta.schema)));
    }
    let mut model = Model::build(
        meta.kind,
        meta.input.vocab,
        meta.input.steps,
        &meta.model_config,
        meta.train_config.seed,
    )?;
    if let Model::Rf(f) = &mut model {
        let layout = meta
            .forest
            .as_ref()
            .ok_or_else(|| Error::Schema("forest checkpoint without forest layout".into()))?;
        *f = decode_forest(layout, &blob)?;
    } else {
        let mut at = 0;
        let params = model.params_mut();
        if params.len() != meta.params.len() {
            return Err(Error::Schema(format!(
                "checkpoint lists {} parameters, architecture has {}",
                meta.params.len(),
                params.len()
            )));
        }
        for (p, l) in params.into_iter().zip(&meta.params) {
            if p.name != l.name || p.shape() != (l.rows, l.cols) {
                return Err(Error::Schema(format!(
                    "parameter `{}` {:?} does not match checkpoint `{}` {:?}",
                    p.name,
                    p.shape(),
                    l.name,
                    (l.rows, l.cols)
                )));
            }
            let n = l.rows * l.cols;
            let src = blob
                .get(at..at + n)
                .ok_or_else(|| Error::Schema("parameter blob truncated".into()))?;
            p.value.data_mut().copy_from_slice(src);
            at += n;
        }
        if at != blob.len() {
            return Err(Error::Schema(format!("{} unused values in parameter blob", blob.len() - at)));
        }
    }
    Ok(FittedModel {
        model,
        input: meta.input,
        model_config: meta.model_config,
        train_config: meta.train_config,
        trace: None,
        best_epoch: meta.best_epoch,
        sweep: meta.sweep,
    })
}
