//! Exact t-SNE and projection of exported patient activations.
//!
//! Two windows are embedded jointly: both activation tables are stacked,
//! zero-padded to the wider width, and embedded in one map, so each patient
//! gets a coordinate pair an external plotter can join with an arrow.

mod tsne;

pub use tsne::{
    calibrate, canonical_order, initial_layout, joint_probabilities, squared_distances, tsne, tsne_from, Affinities, TsneConfig,
    TsneResult, MAX_POINTS, TSNE_INIT_STREAM,
};

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiments::{ActivationTable, Confusion};
use crate::features::ObservationWindow;
use crate::numcore::Matrix;

pub const PROJECTION_SCHEMA: &str = "seqrisk.projection/1";

#[derive(Clone, Debug, PartialEq)]
pub struct PairedPoint {
    pub predicted: u8,
    pub flag: Confusion,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedPatient {
    pub patient_id: String,
    pub label: u8,
    pub predicted: u8,
    pub flag: Confusion,
    pub x: f64,
    pub y: f64,
    /// Present when a second window was embedded.
    pub paired: Option<PairedPoint>,
}

impl ProjectedPatient {
    pub fn transition(&self) -> Option<String> {
        self.paired
            .as_ref()
            .filter(|p| p.predicted != self.predicted)
            .map(|p| format!("{}->{}", self.flag, p.flag))
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub window: ObservationWindow,
    pub paired_window: Option<ObservationWindow>,
    pub patients: Vec<ProjectedPatient>,
    pub kl_trace: Vec<f64>,
}

impl Projection {
    pub fn to_tsv(&self) -> String {
        let mut s = format!("#schema={PROJECTION_SCHEMA}\n#window={}\n", self.window.tag());
        if let Some(w) = self.paired_window {
            let _ = writeln!(s, "#paired_window={}", w.tag());
        }
        let _ = writeln!(
            s,
            "#initial_kl={:.6}\n#final_kl={:.6}",
            self.kl_trace[0],
            self.kl_trace.last().expect("non-empty")
        );
        s.push_str("patient_id\tlabel\tpredicted\tflag\tx\ty");
        if self.paired_window.is_some() {
            s.push_str("\tpaired_predicted\tpaired_flag\tx_end\ty_end\ttransition");
        }
        s.push('\n');
        for p in &self.patients {
            let _ = write!(s, "{}\t{}\t{}\t{}\t{:.6}\t{:.6}", p.patient_id, p.label, p.predicted, p.flag, p.x, p.y);
            if let Some(q) = &p.paired {
                let t = p.transition().unwrap_or_else(|| "-".into());
                let _ = write!(s, "\t{}\t{}\t{:.6}\t{:.6}\t{}", q.predicted, q.flag, q.x, q.y, t);
            }
            s.push('\n');
        }
        s
    }
}

/// Embeds `primary`, and `paired` jointly when given. The paired table
/// must hold exactly the same patients with the same labels.
pub fn project_patients(primary: &ActivationTable, paired: Option<&ActivationTable>, cfg: &TsneConfig) -> Result<Projection> {
    let n = primary.len();
    let Some(other) = paired else {
        let res = tsne(&primary.activations, cfg)?;
        let patients = (0..n)
            .map(|i| ProjectedPatient {
                patient_id: primary.patient_ids[i].clone(),
                label: primary.labels[i],
                predicted: primary.predicted[i],
                flag: primary.flags[i],
                x: res.coords.get(i, 0),
                y: res.coords.get(i, 1.min(cfg.dims - 1)),
                paired: None,
            })
            .collect();
        return Ok(Projection {
            window: primary.window,
            paired_window: None,
            patients,
            kl_trace: res.kl_trace,
        });
    };

    if other.len() != n {
        return Err(Error::Schema(format!("paired activations have {} rows, expected {n}", other.len())));
    }
    let index: HashMap<&str, usize> = other.patient_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut order = Vec::with_capacity(n);
    for (i, id) in primary.patient_ids.iter().enumerate() {
        let j = *index
            .get(id.as_str())
            .ok_or_else(|| Error::Schema(format!("patient {id} missing from paired activations")))?;
        if other.labels[j] != primary.labels[i] {
            return Err(Error::Schema(format!("label of patient {id} differs between activation tables")));
        }
        order.push(j);
    }
    let width = primary.activations.cols().max(other.activations.cols());
    let mut stacked = Matrix::zeros(2 * n, width);
    for i in 0..n {
        let a = primary.activations.row(i);
        stacked.row_mut(i)[..a.len()].copy_from_slice(a);
        let b = other.activations.row(order[i]);
        stacked.row_mut(n + i)[..b.len()].copy_from_slice(b);
    }
    let res = tsne(&stacked, cfg)?;
    let c = |r: usize, k: usize| res.coords.get(r, k.min(cfg.dims - 1));
    let patients = (0..n)
        .map(|i| ProjectedPatient {
            patient_id: primary.patient_ids[i].clone(),
            label: primary.labels[i],
            predicted: primary.predicted[i],
            flag: primary.flags[i],
            x: c(i, 0),
            y: c(i, 1),
            paired: Some(PairedPoint {
                predicted: other.predicted[order[i]],
                flag: other.flags[order[i]],
                x: c(n + i, 0),
                y: c(n + i, 1),
            }),
        })
        .collect();
    Ok(Projection {
        window: primary.window,
        paired_window: Some(other.window),
        patients,
        kl_trace: res.kl_trace,
    })
}
