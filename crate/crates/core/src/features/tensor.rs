use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::slicing::{ConceptKey, SliceCounts};
use super::time::ObservationWindow;
use super::vocab::ConceptVocabulary;
use crate::cohort::{CodeType, PatientRecord};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const DEMO_WIDTH: usize = 12;
pub const RACE_VALUES: usize = 10;

/// `[gender, age, race one-hot(10)]`.
pub fn encode_demographics_raw(gender: u8, age: f64, race: u8) -> Result<[f64; DEMO_WIDTH]> {
    if race as usize >= RACE_VALUES {
        return Err(Error::InvalidRace(race));
    }
    let mut d = [0.0; DEMO_WIDTH];
    d[0] = gender as f64;
    d[1] = age;
    d[2 + race as usize] = 1.0;
    Ok(d)
}

/// Age is whole years at the index date, unscaled.
pub fn encode_demographics(p: &PatientRecord) -> Result<[f64; DEMO_WIDTH]> {
    encode_demographics_raw(p.gender, p.age_at_index() as f64, p.race)
}

/// Per-patient, per-slice concept counts with demographics and labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceTensor {
    pub n: usize,
    pub t: usize,
    pub v: usize,
    /// Entry `(i·t + s)·v + c`.
    pub counts: Vec<u32>,
    /// Distinct encounter days, entry `i·t + s`.
    pub encounters: Vec<u32>,
    pub demographics: Vec<[f64; DEMO_WIDTH]>,
    pub labels: Vec<u8>,
    pub patient_ids: Vec<String>,
    /// Source window; `t` is 1 when aggregated.
    pub window: ObservationWindow,
    pub vocabulary: ConceptVocabulary,
    pub aggregated: bool,
    pub binarized: bool,
    /// Codes seen outside the vocabulary while building.
    pub unknown_events: usize,
}

impl SliceTensor {
    /// Builds a tensor over `window` from already-sliced patients. Unknown
    /// concepts are tallied and skipped.
    pub fn build(
        patients: &[&PatientRecord],
        slices: &[&SliceCounts],
        vocabulary: &ConceptVocabulary,
        window: ObservationWindow,
    ) -> Result<Self> {
        if patients.len() != slices.len() {
            return Err(Error::Dimension {
                op: "tensor build",
                left: (patients.len(), 0),
                right: (slices.len(), 0),
            });
        }
        let index: HashMap<ConceptKey, usize> = vocabulary.index();
        let (n, t, v) = (patients.len(), window.len(), vocabulary.len());
        let mut counts = vec![0u32; n * t * v];
        let mut encounters = vec![0u32; n * t];
        let mut demographics = Vec::with_capacity(n);
        let mut unknown = 0;
        for (i, (p, sc)) in patients.iter().zip(slices).enumerate() {
            demographics.push(encode_demographics(p)?);
            for s in 0..t {
                encounters[i * t + s] = sc.encounter_days[s];
            }
            for (key, c) in &sc.counts {
                match index.get(key) {
                    Some(&col) => {
                        for s in 0..t {
                            counts[(i * t + s) * v + col] = c[s];
                        }
                    }
                    None => unknown += c[..t].iter().map(|&x| x as usize).sum::<usize>(),
                }
            }
        }
        Ok(Self {
            n,
            t,
            v,
            counts,
            encounters,
            demographics,
            labels: patients.iter().map(|p| p.label.as_u8()).collect(),
            patient_ids: patients.iter().map(|p| p.patient_id.clone()).collect(),
            window,
            vocabulary: vocabulary.clone(),
            aggregated: false,
            binarized: false,
            unknown_events: unknown,
        })
    }

    /// Tensor from raw arrays with a placeholder vocabulary `C0..C{v-1}`
    /// (diagnosis codes) and one encounter day per slice.
    pub fn from_parts(
        t: usize,
        v: usize,
        counts: Vec<u32>,
        demographics: Vec<[f64; DEMO_WIDTH]>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = labels.len();
        if counts.len() != n * t * v || demographics.len() != n {
            return Err(Error::Dimension {
                op: "tensor parts",
                left: (counts.len(), demographics.len()),
                right: (n * t * v, n),
            });
        }
        Ok(Self {
            n,
            t,
            v,
            counts,
            encounters: vec![1; n * t],
            demographics,
            labels,
            patient_ids: (0..n).map(|i| format!("P{i:07}")).collect(),
            window: ObservationWindow::new(t)?,
            vocabulary: ConceptVocabulary {
                concepts: (0..v)
                    .map(|c| super::vocab::Concept {
                        code: format!("C{c}"),
                        code_type: CodeType::Dx,
                        variance: 0.0,
                    })
                    .collect(),
                threshold: 0.0,
            },
            aggregated: false,
            binarized: false,
            unknown_events: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, i: usize, s: usize, c: usize) -> u32 {
        self.counts[(i * self.t + s) * self.v + c]
    }

    pub fn slice_row(&self, i: usize, s: usize) -> &[u32] {
        let start = (i * self.t + s) * self.v;
        &self.counts[start..start + self.v]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Rows in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let (t, v) = (self.t, self.v);
        let mut counts = Vec::with_capacity(rows.len() * t * v);
        let mut encounters = Vec::with_capacity(rows.len() * t);
        for &i in rows {
            counts.extend_from_slice(&self.counts[i * t * v..(i + 1) * t * v]);
            encounters.extend_from_slice(&self.encounters[i * t..(i + 1) * t]);
        }
        Self {
            n: rows.len(),
            counts,
            encounters,
            demographics: rows.iter().map(|&i| self.demographics[i]).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            patient_ids: rows.iter().map(|&i| self.patient_ids[i].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            ..self.header()
        }
    }

    fn header(&self) -> Self {
        Self {
            n: self.n,
            t: self.t,
            v: self.v,
            counts: Vec::new(),
            encounters: Vec::new(),
            demographics: Vec::new(),
            labels: Vec::new(),
            patient_ids: Vec::new(),
            window: self.window,
            vocabulary: ConceptVocabulary::default(),
            aggregated: self.aggregated,
            binarized: self.binarized,
            unknown_events: self.unknown_events,
        }
    }

    /// Keeps the oldest `window.len()` slices.
    pub fn restrict_window(&self, window: ObservationWindow) -> Result<Self> {
        if self.aggregated || window.len() > self.t {
            return Err(Error::Config(format!(
                "cannot restrict a {}-slice tensor to window {window}",
                self.t
            )));
        }
        let (t2, v) = (window.len(), self.v);
        let mut counts = Vec::with_capacity(self.n * t2 * v);
        let mut encounters = Vec::with_capacity(self.n * t2);
        for i in 0..self.n {
            for s in 0..t2 {
                counts.extend_from_slice(self.slice_row(i, s));
                encounters.push(self.encounters[i * self.t + s]);
            }
        }
        Ok(Self {
            t: t2,
            counts,
            encounters,
            window,
            demographics: self.demographics.clone(),
            labels: self.labels.clone(),
            patient_ids: self.patient_ids.clone(),
            vocabulary: self.vocabulary.clone(),
            ..self.header()
        })
    }

    /// Keeps the given vocabulary columns in the given order.
    pub fn select_concepts(&self, columns: &[usize]) -> Self {
        let v2 = columns.len();
        let mut counts = Vec::with_capacity(self.n * self.t * v2);
        for i in 0..self.n {
            for s in 0..self.t {
                let row = self.slice_row(i, s);
                counts.extend(columns.iter().map(|&c| row[c]));
            }
        }
        Self {
            v: v2,
            counts,
            encounters: self.encounters.clone(),
            demographics: self.demographics.clone(),
            labels: self.labels.clone(),
            patient_ids: self.patient_ids.clone(),
            vocabulary: self.vocabulary.select(columns),
            ..self.header()
        }
    }

    /// Drops procedure concepts.
    pub fn without_procedures(&self) -> Self {
        let keep: Vec<usize> = (0..self.v)
            .filter(|&c| self.vocabulary.concepts[c].code_type != CodeType::Px)
            .collect();
        self.select_concepts(&keep)
    }

    /// Zeroes the demographic block.
    pub fn without_demographics(&self) -> Self {
        let mut out = self.clone();
        for d in &mut out.demographics {
            *d = [0.0; DEMO_WIDTH];
        }
        out
    }

    /// Replaces raw age with `(age − mean) / std`.
    pub fn standardize_age(&mut self, mean: f64, std: f64) {
        let std = if std > 0.0 { std } else { 1.0 };
        for d in &mut self.demographics {
            d[1] = (d[1] - mean) / std;
        }
    }

    /// Mean and population std of raw age.
    pub fn age_moments(&self) -> (f64, f64) {
        let n = self.n.max(1) as f64;
        let mean = self.demographics.iter().map(|d| d[1]).sum::<f64>() / n;
        let var = self.demographics.iter().map(|d| (d[1] - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    /// Rows with at least `per_slice_min` encounter days in every slice.
    pub fn density_filter(&self, per_slice_min: u32) -> Self {
        let rows: Vec<usize> = (0..self.n)
            .filter(|&i| self.encounters[i * self.t..(i + 1) * self.t].iter().all(|&e| e >= per_slice_min))
            .collect();
        self.subset(&rows)
    }

    pub fn per_step_width(&self, emb_dim: usize) -> usize {
        DEMO_WIDTH + self.v * emb_dim
    }

    pub fn tabular_width(&self) -> usize {
        self.t * self.v + DEMO_WIDTH
    }

    /// Row `i` of [`flatten_for_tabular`] written into `out`.
    pub fn tabular_row(&self, i: usize, out: &mut [f64]) {
        let tv = self.t * self.v;
        for (o, &c) in out[..tv].iter_mut().zip(&self.counts[i * tv..(i + 1) * tv]) {
            *o = c as f64;
        }
        out[tv..].copy_from_slice(&self.demographics[i]);
    }
}

/// `min(count, 1)` everywhere.
pub fn binarize(t: &SliceTensor) -> SliceTensor {
    let mut out = t.clone();
    for c in &mut out.counts {
        *c = (*c).min(1);
    }
    out.binarized = true;
    out
}

/// Sums counts over the slice axis; encounter days are summed as well.
pub fn aggregate_slices(t: &SliceTensor) -> SliceTensor {
    if t.t == 1 {
        return t.clone();
    }
    let mut counts = vec![0u32; t.n * t.v];
    let mut encounters = vec![0u32; t.n];
    for i in 0..t.n {
        let dst = &mut counts[i * t.v..(i + 1) * t.v];
        for s in 0..t.t {
            for (d, &c) in dst.iter_mut().zip(t.slice_row(i, s)) {
                *d += c;
            }
            encounters[i] += t.encounters[i * t.t + s];
        }
    }
    SliceTensor {
        t: 1,
        counts,
        encounters,
        demographics: t.demographics.clone(),
        labels: t.labels.clone(),
        patient_ids: t.patient_ids.clone(),
        vocabulary: t.vocabulary.clone(),
        aggregated: true,
        ..t.header()
    }
}

/// `N × (T·V + 12)`: slice blocks oldest first, then demographics.
pub fn flatten_for_tabular(t: &SliceTensor) -> Matrix {
    let w = t.tabular_width();
    let mut m = Matrix::zeros(t.n, w);
    for i in 0..t.n {
        t.tabular_row(i, m.row_mut(i));
    }
    m
}
