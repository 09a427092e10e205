use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::slicing::{slice_events, SliceCounts};
use super::tensor::{binarize, SliceTensor};
use super::time::ObservationWindow;
use super::vocab::{build_vocabulary, ConceptVocabulary};
use crate::cohort::{
    build_cohort, split_cohort, CodedEvent, CohortConfig, PatientRecord, SelectionSummary, Split, SplitAssignment,
};
use crate::error::Result;

/// Options controlling tensor construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window: ObservationWindow,
    pub binarize: bool,
    /// Minimum encounter days per window slice; 0 keeps everyone.
    pub density_min: u32,
    pub variance_threshold: f64,
    /// Standardize age with training moments.
    pub age_zscore: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window: ObservationWindow::new(2).expect("valid"),
            binarize: false,
            density_min: 0,
            variance_threshold: 1.0,
            age_zscore: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepareDiagnostics {
    pub selection: SelectionSummary,
    /// Outcome-window events dated after the index date, excluded before slicing.
    pub post_index_events: usize,
    /// Buffer-month and out-of-span events.
    pub dropped_events: usize,
    pub candidate_concepts: usize,
    pub vocabulary_size: usize,
    pub unknown_events: BTreeMap<String, usize>,
    pub density_removed: BTreeMap<String, usize>,
    pub age_mean: Option<f64>,
    pub age_std: Option<f64>,
}

/// Selected, split and sliced cohort over all four slices, with the
/// training-split vocabulary. Views for any window are cut from it.
#[derive(Clone, Debug)]
pub struct PreparedCohort {
    pub full: BTreeMap<Split, SliceTensor>,
    pub vocabulary: ConceptVocabulary,
    pub split: SplitAssignment,
    pub diagnostics: PrepareDiagnostics,
}

/// Tensors for one feature configuration.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub train: SliceTensor,
    pub validation: SliceTensor,
    pub test: SliceTensor,
    pub vocabulary: ConceptVocabulary,
    pub diagnostics: PrepareDiagnostics,
}

impl PreparedData {
    pub fn get(&self, split: Split) -> &SliceTensor {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }
}

/// Selection, splitting, slicing and vocabulary construction.
pub fn prepare_cohort(
    patients: &[PatientRecord],
    events: &[CodedEvent],
    cohort: &CohortConfig,
    variance_threshold: f64,
) -> Result<PreparedCohort> {
    cohort.validate()?;
    let (selected, selection) = build_cohort(patients, events, cohort);
    let mut diagnostics = PrepareDiagnostics {
        selection,
        ..Default::default()
    };

    let mut by: BTreeMap<&str, Vec<&CodedEvent>> = BTreeMap::new();
    for e in events {
        by.entry(e.patient_id.as_str()).or_default().push(e);
    }
    let mut sliced: Vec<SliceCounts> = Vec::with_capacity(selected.len());
    for p in &selected {
        let evs = by.remove(p.patient_id.as_str()).unwrap_or_default();
        let (pre, post): (Vec<&CodedEvent>, Vec<&CodedEvent>) =
            evs.into_iter().partition(|e| e.date <= p.index_date);
        diagnostics.post_index_events += post.len();
        let sc = slice_events(pre, p.index_date)?;
        diagnostics.dropped_events += sc.dropped;
        sliced.push(sc);
    }

    let ids: Vec<&str> = selected.iter().map(|p| p.patient_id.as_str()).collect();
    let split = split_cohort(&ids, &cohort.splits, cohort.seed)?;
    let rows = |s: Split| -> Vec<usize> {
        (0..selected.len())
            .filter(|&i| split.get(&selected[i].patient_id) == Some(s))
            .collect()
    };

    let train_rows = rows(Split::Train);
    let train_counts: Vec<&SliceCounts> = train_rows.iter().map(|&i| &sliced[i]).collect();
    diagnostics.candidate_concepts = {
        let mut keys = std::collections::BTreeSet::new();
        for sc in &train_counts {
            keys.extend(sc.counts.keys());
        }
        keys.len()
    };
    let vocabulary = build_vocabulary(&train_counts, variance_threshold)?;
    diagnostics.vocabulary_size = vocabulary.len();

    let window = ObservationWindow::new(4)?;
    let mut full = BTreeMap::new();
    for s in Split::ALL {
        let r = rows(s);
        let ps: Vec<&PatientRecord> = r.iter().map(|&i| &selected[i]).collect();
        let cs: Vec<&SliceCounts> = r.iter().map(|&i| &sliced[i]).collect();
        let t = SliceTensor::build(&ps, &cs, &vocabulary, window)?;
        diagnostics.unknown_events.insert(s.to_string(), t.unknown_events);
        full.insert(s, t);
    }
    Ok(PreparedCohort {
        full,
        vocabulary,
        split,
        diagnostics,
    })
}

impl PreparedCohort {
    /// Keeps rows where `keep(split, tensor, row)` holds. The vocabulary and
    /// split assignment are left as built.
    pub fn filter_rows(&self, keep: impl Fn(Split, &SliceTensor, usize) -> bool) -> Self {
        let full = self
            .full
            .iter()
            .map(|(&s, t)| {
                let rows: Vec<usize> = (0..t.n).filter(|&i| keep(s, t, i)).collect();
                (s, t.subset(&rows))
            })
            .collect();
        Self {
            full,
            vocabulary: self.vocabulary.clone(),
            split: self.split.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Window restriction, density filter, binarization and optional age
    /// standardization, in that order.
    pub fn view(&self, cfg: &FeatureConfig) -> Result<PreparedData> {
        let mut diagnostics = self.diagnostics.clone();
        let mut out = BTreeMap::new();
        for (s, t) in &self.full {
            let mut v = t.restrict_window(cfg.window)?;
            if cfg.density_min > 0 {
                let before = v.n;
                v = v.density_filter(cfg.density_min);
                diagnostics.density_removed.insert(s.to_string(), before - v.n);
            }
            if cfg.binarize {
                v = binarize(&v);
            }
            out.insert(*s, v);
        }
        if cfg.age_zscore {
            let (mean, std) = out[&Split::Train].age_moments();
            for t in out.values_mut() {
                t.standardize_age(mean, std);
            }
            diagnostics.age_mean = Some(mean);
            diagnostics.age_std = Some(std);
        }
        let mut take = |s| out.remove(&s).expect("all splits built");
        Ok(PreparedData {
            train: take(Split::Train),
            validation: take(Split::Validation),
            test: take(Split::Test),
            vocabulary: self.vocabulary.clone(),
            diagnostics,
        })
    }
}

/// Full pipeline from raw patients and events to split tensors.
pub fn prepare(
    patients: &[PatientRecord],
    events: &[CodedEvent],
    cohort: &CohortConfig,
    features: &FeatureConfig,
) -> Result<PreparedData> {
    prepare_cohort(patients, events, cohort, features.variance_threshold)?.view(features)
}

/// Ids of patients with at least `per_slice_min` encounter days in every
/// slice of `window`, computed from raw events.
pub fn density_filter(
    patients: &[PatientRecord],
    events: &[CodedEvent],
    per_slice_min: u32,
    window: ObservationWindow,
) -> Result<Vec<String>> {
    let mut by: BTreeMap<&str, Vec<&CodedEvent>> = BTreeMap::new();
    for e in events {
        by.entry(e.patient_id.as_str()).or_default().push(e);
    }
    let mut keep = Vec::new();
    for p in patients {
        let evs: Vec<&CodedEvent> = by
            .get(p.patient_id.as_str())
            .map(|v| v.iter().copied().filter(|e| e.date <= p.index_date).collect())
            .unwrap_or_default();
        let sc = slice_events(evs, p.index_date)?;
        if sc.encounter_days[..window.len()].iter().all(|&d| d >= per_slice_min) {
            keep.push(p.patient_id.clone());
        }
    }
    Ok(keep)
}
