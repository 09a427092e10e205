use serde::{Deserialize, Serialize};

use super::container::{read_container, write_container};
use crate::error::{Error, Result};
use crate::features::{ConceptVocabulary, ObservationWindow, SliceTensor, DEMO_WIDTH};

pub const TENSOR_SCHEMA: &str = "seqrisk.tensor/1";

/// Blob layout: counts `N·T·V`, encounters `N·T`, demographics `N·12`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub schema: String,
    pub n: usize,
    pub t: usize,
    pub v: usize,
    pub window: ObservationWindow,
    pub aggregated: bool,
    pub binarized: bool,
    pub unknown_events: usize,
    pub patient_ids: Vec<String>,
    pub labels: Vec<u8>,
    pub vocabulary: ConceptVocabulary,
}

pub fn encode_tensor(x: &SliceTensor) -> Result<Vec<u8>> {
    let meta = TensorMeta {
        schema: TENSOR_SCHEMA.into(),
        n: x.n,
        t: x.t,
        v: x.v,
        window: x.window,
        aggregated: x.aggregated,
        binarized: x.binarized,
        unknown_events: x.unknown_events,
        patient_ids: x.patient_ids.clone(),
        labels: x.labels.clone(),
        vocabulary: x.vocabulary.clone(),
    };
    let mut blob = Vec::with_capacity(x.counts.len() + x.encounters.len() + x.n * DEMO_WIDTH);
    blob.extend(x.counts.iter().map(|&c| c as f64));
    blob.extend(x.encounters.iter().map(|&c| c as f64));
    for d in &x.demographics {
        blob.extend_from_slice(d);
    }
    write_container(&meta, &blob)
}

fn as_count(v: f64) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::Schema(format!("invalid count {v} in tensor file")))
    }
}

pub fn decode_tensor(bytes: &[u8]) -> Result<SliceTensor> {
    let (m, blob): (TensorMeta, Vec<f64>) = read_container(bytes)?;
    if m.schema != TENSOR_SCHEMA {
        return Err(Error::Schema(format!("unsupported tensor schema `{}`", m.schema)));
    }
    let (nc, ne) = (m.n * m.t * m.v, m.n * m.t);
    if blob.len() != nc + ne + m.n * DEMO_WIDTH
        || m.patient_ids.len() != m.n
        || m.labels.len() != m.n
        || m.vocabulary.len() != m.v
    {
        return Err(Error::Schema("tensor file sizes are inconsistent".into()));
    }
    if m.labels.iter().any(|&l| l > 1) {
        return Err(Error::Schema("tensor labels must be 0/1".into()));
    }
    let counts = blob[..nc].iter().map(|&v| as_count(v)).collect::<Result<_>>()?;
    let encounters = blob[nc..nc + ne].iter().map(|&v| as_count(v)).collect::<Result<_>>()?;
    let demographics = blob[nc + ne..]
        .chunks_exact(DEMO_WIDTH)
        .map(|c| c.try_into().expect("12 wide"))
        .collect();
    Ok(SliceTensor {
        n: m.n,
        t: m.t,
        v: m.v,
        counts,
        encounters,
        demographics,
        labels: m.labels,
        patient_ids: m.patient_ids,
        window: m.window,
        vocabulary: m.vocabulary,
        aggregated: m.aggregated,
        binarized: m.binarized,
        unknown_events: m.unknown_events,
    })
}
