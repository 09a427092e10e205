use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activations::{export_dense_activations, ActivationTable};
use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Report, ReportRow};
use super::runner::{fit_and_score, metric_rows, with_pool};
use crate::cohort::CodeType;
use crate::error::Result;
use crate::features::{FeatureConfig, ObservationWindow, PreparedCohort, PreparedData, SliceTensor};
use crate::models::{FittedModel, Model};
use crate::metrics::{summarize_runs, EvalMetrics, RunSummary, DECISION_THRESHOLD};

pub const DELTA_SCHEMA: &str = "seqrisk.delta/1";

/// Recorded in every delta report.
pub const FLIP_READING: &str = "flipped set = CHF-labelled test patients predicted negative under the short \
window and positive under the long window; the source's 'true negatives' is read as true positives";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaStatus {
    Ok,
    /// No flipped patients; nothing ranked and nothing retrained.
    EmptyFlippedSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptDelta {
    pub column: usize,
    pub code: String,
    pub code_type: CodeType,
    /// Mean count per added slice over the flipped set.
    pub added_mean: f64,
    /// Mean count per shared slice over the flipped set.
    pub shared_mean: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaFeatureReport {
    pub header: String,
    pub status: DeltaStatus,
    pub short_window: ObservationWindow,
    pub long_window: ObservationWindow,
    pub flipped: Vec<String>,
    /// Every vocabulary concept, in column order.
    pub deltas: Vec<ConceptDelta>,
    /// `min(k, V)` concepts by `|delta|` descending; ties keep column order.
    pub top_k: Vec<ConceptDelta>,
    pub k: usize,
}

impl DeltaFeatureReport {
    pub fn to_tsv(&self) -> String {
        let mut s = format!("#schema={DELTA_SCHEMA}\n#note={}\n", self.header);
        let status = match self.status {
            DeltaStatus::Ok => "ok",
            DeltaStatus::EmptyFlippedSet => "empty-flipped-set",
        };
        let _ = writeln!(
            s,
            "#status={status}\n#short_window={}\n#long_window={}\n#flipped={}",
            self.short_window.tag(),
            self.long_window.tag(),
            self.flipped.len()
        );
        s.push_str("rank\tcode\tcode_type\tadded_mean\tshared_mean\tdelta\n");
        for (r, d) in self.top_k.iter().enumerate() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                r + 1,
                d.code,
                d.code_type,
                d.added_mean,
                d.shared_mean,
                d.delta
            );
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct DeltaStudy {
    pub features: DeltaFeatureReport,
    pub table: Report,
    pub full_auroc: RunSummary,
    pub subset_auroc: Option<RunSummary>,
    /// Long-window hidden states of run 0 on the test split, compared with
    /// the short window; present when the focus model is the LSTM.
    pub activations: Option<ActivationTable>,
}

/// Patients of `long` (by id) that are positive, predicted negative in
/// `short_probs` and positive in `long_probs`.
pub fn flipped_patients(
    short: &SliceTensor,
    short_probs: &[[f64; 2]],
    long: &SliceTensor,
    long_probs: &[[f64; 2]],
) -> Vec<String> {
    let short_pos: HashMap<&str, bool> = short
        .patient_ids
        .iter()
        .zip(short_probs)
        .map(|(id, p)| (id.as_str(), p[1] >= DECISION_THRESHOLD))
        .collect();
    (0..long.n)
        .filter(|&i| {
            long.labels[i] == 1
                && long_probs[i][1] >= DECISION_THRESHOLD
                && short_pos.get(long.patient_ids[i].as_str()) == Some(&false)
        })
        .map(|i| long.patient_ids[i].clone())
        .collect()
}

/// Per-concept mean count over the added slices `shared..t` minus the mean
/// over the shared slices `0..shared`, averaged over `rows`.
pub fn concept_deltas(x: &SliceTensor, rows: &[usize], shared: usize) -> Vec<ConceptDelta> {
    assert!(shared >= 1 && shared < x.t, "need shared and added slices");
    let added = x.t - shared;
    let n = rows.len().max(1) as f64;
    (0..x.v)
        .map(|c| {
            let (mut a, mut b) = (0.0, 0.0);
            for &i in rows {
                for s in 0..x.t {
                    let v = x.count(i, s, c) as f64;
                    if s < shared {
                        b += v;
                    } else {
                        a += v;
                    }
                }
            }
            let added_mean = a / (n * added as f64);
            let shared_mean = b / (n * shared as f64);
            let concept = &x.vocabulary.concepts[c];
            ConceptDelta {
                column: c,
                code: concept.code.clone(),
                code_type: concept.code_type,
                added_mean,
                shared_mean,
                delta: added_mean - shared_mean,
            }
        })
        .collect()
}

pub fn rank_by_abs_delta(deltas: &[ConceptDelta], k: usize) -> Vec<ConceptDelta> {
    let mut out = deltas.to_vec();
    out.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then(a.column.cmp(&b.column)));
    out.truncate(k);
    out
}

type Run = (Vec<[f64; 2]>, EvalMetrics);

/// Runs in seed order; the fitted model is kept for run 0 only.
fn train_runs(data: &PreparedData, cfg: &ExperimentConfig) -> Result<(FittedModel, Vec<Run>)> {
    let fitted = with_pool(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| fit_and_score(cfg.focus_model, data, cfg, &cfg.train_for_run(r)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut it = fitted.into_iter();
    let (first, p, e) = it.next().expect("runs >= 1");
    let mut runs = vec![(p, e)];
    runs.extend(it.map(|(_, p, e)| (p, e)));
    Ok((first, runs))
}

fn auroc_of(runs: &[Run]) -> Vec<f64> {
    runs.iter().map(|(_, e)| e.micro_auroc).collect()
}

/// Short- and long-window models, the flipped set from the first run of
/// each, the delta ranking, and a retrain on the top-k concepts.
pub fn run_temporal_delta_study(cohort: &PreparedCohort, cfg: &ExperimentConfig) -> Result<DeltaStudy> {
    cfg.validate()?;
    let (short_w, long_w) = (cfg.windows[0], cfg.windows[1]);
    let view = |w| {
        cohort.view(&FeatureConfig {
            window: w,
            ..cfg.features.clone()
        })
    };
    let short = view(short_w)?;
    let long = view(long_w)?;
    let (_, short_runs) = train_runs(&short, cfg)?;
    let (long_model, long_runs) = train_runs(&long, cfg)?;
    let activations = match &long_model.model {
        Model::Lstm(net) => Some(export_dense_activations(net, &long.test)?.compare_with(
            short_w,
            &short.test.patient_ids,
            &short_runs[0].0,
        )?),
        _ => None,
    };

    let flipped = flipped_patients(&short.test, &short_runs[0].0, &long.test, &long_runs[0].0);
    let model = cfg.focus_model.name();
    let mut table = Report::new(ExperimentKind::TemporalDelta.name());
    table.notes.push(FLIP_READING.into());
    let mets = |runs: &[Run]| runs.iter().map(|r| r.1).collect::<Vec<_>>();
    table.rows.extend(metric_rows(model, &short_w.tag(), "short", &mets(&short_runs)));
    table.rows.extend(metric_rows(model, &long_w.tag(), "full", &mets(&long_runs)));
    table
        .rows
        .push(ReportRow::new(model, &long_w.tag(), "flipped", "patients", vec![flipped.len() as f64]));

    let k = cfg.ablations.delta_top_k.min(long.test.v);
    let full_auroc = summarize_runs(&auroc_of(&long_runs));
    let mut features = DeltaFeatureReport {
        header: FLIP_READING.into(),
        status: DeltaStatus::EmptyFlippedSet,
        short_window: short_w,
        long_window: long_w,
        flipped,
        deltas: Vec::new(),
        top_k: Vec::new(),
        k,
    };
    if features.flipped.is_empty() {
        table.notes.push("flipped set empty: no ranking, no retrain".into());
        return Ok(DeltaStudy {
            features,
            table,
            full_auroc,
            subset_auroc: None,
            activations,
        });
    }

    let index: HashMap<&str, usize> = long
        .test
        .patient_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let rows: Vec<usize> = features.flipped.iter().map(|id| index[id.as_str()]).collect();
    features.deltas = concept_deltas(&long.test, &rows, short_w.len());
    features.top_k = rank_by_abs_delta(&features.deltas, k);
    features.status = DeltaStatus::Ok;

    let mut columns: Vec<usize> = features.top_k.iter().map(|d| d.column).collect();
    columns.sort_unstable();
    let subset = PreparedData {
        train: long.train.select_concepts(&columns),
        validation: long.validation.select_concepts(&columns),
        test: long.test.select_concepts(&columns),
        vocabulary: long.vocabulary.select(&columns),
        diagnostics: long.diagnostics.clone(),
    };
    let (_, subset_runs) = train_runs(&subset, cfg)?;
    let condition = format!("subset-top{k}");
    table.rows.extend(metric_rows(model, &long_w.tag(), &condition, &mets(&subset_runs)));
    let subset_auroc = summarize_runs(&auroc_of(&subset_runs));
    table.rows.push(ReportRow::new(
        model,
        &long_w.tag(),
        &condition,
        "micro_auroc_ratio",
        vec![subset_auroc.mean / full_auroc.mean],
    ));
    Ok(DeltaStudy {
        features,
        table,
        full_auroc,
        subset_auroc: Some(subset_auroc),
        activations,
    })
}
