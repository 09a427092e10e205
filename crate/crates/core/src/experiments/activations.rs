use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ObservationWindow, SliceTensor};
use crate::metrics::DECISION_THRESHOLD;
use crate::models::{predict_network, LstmClassifier, PREDICT_BATCH};
use crate::numcore::Matrix;

pub const ACTIVATION_SCHEMA: &str = "seqrisk.activations/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Confusion {
    Tp,
    Fp,
    Tn,
    Fn,
}

impl Confusion {
    pub fn of(label: u8, predicted: u8) -> Self {
        match (label, predicted) {
            (1, 1) => Confusion::Tp,
            (0, 1) => Confusion::Fp,
            (0, _) => Confusion::Tn,
            _ => Confusion::Fn,
        }
    }
}

impl fmt::Display for Confusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confusion::Tp => "TP",
            Confusion::Fp => "FP",
            Confusion::Tn => "TN",
            Confusion::Fn => "FN",
        })
    }
}

impl FromStr for Confusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "TP" => Confusion::Tp,
            "FP" => Confusion::Fp,
            "TN" => Confusion::Tn,
            "FN" => Confusion::Fn,
            _ => return Err(Error::Schema(format!("unknown confusion flag `{s}`"))),
        })
    }
}

pub fn predicted_class(p: &[f64; 2]) -> u8 {
    u8::from(p[1] >= DECISION_THRESHOLD)
}

/// Predictions of a second window's model for the same patients.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub window: ObservationWindow,
    pub predicted: Vec<u8>,
    pub flags: Vec<Confusion>,
}

impl Comparison {
    /// `"FN->TP"` style transition where the predicted class differs,
    /// read from the shorter window to the longer one.
    pub fn transition(&self, table: &ActivationTable, i: usize) -> Option<String> {
        let (a, b) = (table.flags[i], self.flags[i]);
        let (from, to) = if self.window.len() < table.window.len() { (b, a) } else { (a, b) };
        (self.predicted[i] != table.predicted[i]).then(|| format!("{from}->{to}"))
    }
}

/// Head-input activations `N × (T·H)` with per-patient flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationTable {
    pub window: ObservationWindow,
    pub patient_ids: Vec<String>,
    pub labels: Vec<u8>,
    pub predicted: Vec<u8>,
    pub flags: Vec<Confusion>,
    pub activations: Matrix,
    pub comparison: Option<Comparison>,
}

/// Concatenated LSTM hidden states and threshold-0.5 flags for `x`.
pub fn export_dense_activations(model: &LstmClassifier, x: &SliceTensor) -> Result<ActivationTable> {
    let probs = predict_network(model, x)?;
    let width = model.config.head_width();
    let mut activations = Matrix::zeros(x.n, width);
    let rows: Vec<usize> = (0..x.n).collect();
    for chunk in rows.chunks(PREDICT_BATCH) {
        let h = model.hidden_states(x, chunk)?;
        for (k, &i) in chunk.iter().enumerate() {
            activations.row_mut(i).copy_from_slice(h.row(k));
        }
    }
    let predicted: Vec<u8> = probs.iter().map(predicted_class).collect();
    Ok(ActivationTable {
        window: x.window,
        patient_ids: x.patient_ids.clone(),
        labels: x.labels.clone(),
        flags: x.labels.iter().zip(&predicted).map(|(&l, &p)| Confusion::of(l, p)).collect(),
        predicted,
        activations,
        comparison: None,
    })
}

impl ActivationTable {
    pub fn len(&self) -> usize {
        self.patient_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patient_ids.is_empty()
    }

    /// Attaches another window's predictions, matched by patient id.
    pub fn compare_with(mut self, window: ObservationWindow, ids: &[String], probs: &[[f64; 2]]) -> Result<Self> {
        let by: HashMap<&str, &[f64; 2]> = ids.iter().map(String::as_str).zip(probs).collect();
        let mut predicted = Vec::with_capacity(self.len());
        for id in &self.patient_ids {
            let p = by
                .get(id.as_str())
                .ok_or_else(|| Error::DataIntegrity(format!("patient {id} missing from window {window}")))?;
            predicted.push(predicted_class(p));
        }
        let flags = self.labels.iter().zip(&predicted).map(|(&l, &p)| Confusion::of(l, p)).collect();
        self.comparison = Some(Comparison {
            window,
            predicted,
            flags,
        });
        Ok(self)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("#schema={ACTIVATION_SCHEMA}\n#window={}\n", self.window.tag());
        if let Some(c) = &self.comparison {
            let _ = writeln!(s, "#compare_window={}", c.window.tag());
        }
        s.push_str("patient_id\tlabel\tpredicted\tflag");
        if self.comparison.is_some() {
            s.push_str("\tcompare_predicted\tcompare_flag\ttransition");
        }
        for j in 0..self.activations.cols() {
            let _ = write!(s, "\ta{j}");
        }
        s.push('\n');
        for i in 0..self.len() {
            let _ = write!(s, "{}\t{}\t{}\t{}", self.patient_ids[i], self.labels[i], self.predicted[i], self.flags[i]);
            if let Some(c) = &self.comparison {
                let t = c.transition(self, i).unwrap_or_else(|| "-".into());
                let _ = write!(s, "\t{}\t{}\t{}", c.predicted[i], c.flags[i], t);
            }
            for v in self.activations.row(i) {
                // round-trip exact
                let _ = write!(s, "\t{v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut window = None;
        let mut compare = None;
        let mut schema_seen = false;
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.peek() {
            let Some(meta) = l.strip_prefix('#') else { break };
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("bad metadata line `{l}`")))?;
            match k {
                "schema" if v == ACTIVATION_SCHEMA => schema_seen = true,
                "schema" => return Err(Error::Schema(format!("unsupported activation schema `{v}`"))),
                "window" => window = Some(v.parse::<ObservationWindow>()?),
                "compare_window" => compare = Some(v.parse::<ObservationWindow>()?),
                _ => {}
            }
            lines.next();
        }
        if !schema_seen {
            return Err(Error::Schema(format!("missing #schema={ACTIVATION_SCHEMA} marker")));
        }
        let window = window.ok_or_else(|| Error::Schema("missing #window".into()))?;
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Schema("missing header row".into()))?
            .split('\t')
            .collect();
        let fixed = if compare.is_some() { 7 } else { 4 };
        let expect: &[&str] = &[
            "patient_id",
            "label",
            "predicted",
            "flag",
            "compare_predicted",
            "compare_flag",
            "transition",
        ][..fixed];
        if header.len() <= fixed || header[..fixed] != *expect {
            return Err(Error::Schema(format!("activation header must start with {}", expect.join(","))));
        }
        let width = header.len() - fixed;
        let mut t = ActivationTable {
            window,
            patient_ids: Vec::new(),
            labels: Vec::new(),
            predicted: Vec::new(),
            flags: Vec::new(),
            activations: Matrix::zeros(0, width),
            comparison: compare.map(|w| Comparison {
                window: w,
                predicted: Vec::new(),
                flags: Vec::new(),
            }),
        };
        let mut data = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != header.len() {
                return Err(Error::Schema(format!(
                    "activation row {} has {} columns, header has {}",
                    n + 1,
                    f.len(),
                    header.len()
                )));
            }
            let bit = |s: &str| match s {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::Schema(format!("expected 0/1, got `{s}` in row {}", n + 1))),
            };
            t.patient_ids.push(f[0].to_string());
            t.labels.push(bit(f[1])?);
            t.predicted.push(bit(f[2])?);
            t.flags.push(f[3].parse()?);
            if let Some(c) = &mut t.comparison {
                c.predicted.push(bit(f[4])?);
                c.flags.push(f[5].parse()?);
            }
            for v in &f[fixed..] {
                data.push(
                    v.parse::<f64>()
                        .map_err(|_| Error::Schema(format!("non-numeric activation `{v}` in row {}", n + 1)))?,
                );
            }
        }
        t.activations = Matrix::from_vec(t.patient_ids.len(), width, data)?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_cells() {
        assert_eq!(Confusion::of(1, 1), Confusion::Tp);
        assert_eq!(Confusion::of(0, 1), Confusion::Fp);
        assert_eq!(Confusion::of(0, 0), Confusion::Tn);
        assert_eq!(Confusion::of(1, 0), Confusion::Fn);
        assert_eq!(predicted_class(&[0.5, 0.5]), 1);
        assert_eq!(predicted_class(&[0.51, 0.49]), 0);
    }
}
