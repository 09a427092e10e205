use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Report, ReportRow};
use super::runner::{fit_and_score, with_pool};
use crate::error::Result;
use crate::features::{FeatureConfig, PreparedCohort, SliceTensor};

pub const GRID_SCHEMA: &str = "seqrisk.agegrid/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeCell {
    pub min_age: i32,
    pub max_age: i32,
    pub n_train: usize,
    pub n_test: usize,
    pub micro_auroc: Option<f64>,
    pub micro_aucpr: Option<f64>,
    /// Why the cell is undefined; `None` when scored.
    pub undefined: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeGridResult {
    pub window: String,
    pub model: String,
    pub runs: usize,
    pub cells: Vec<AgeCell>,
}

impl AgeGridResult {
    /// Plot-ready table; undefined cells carry `NA`.
    pub fn to_tsv(&self) -> String {
        let mut s = format!("#schema={GRID_SCHEMA}\n#model={}\n#window={}\n#runs={}\n", self.model, self.window, self.runs);
        s.push_str("min_age\tmax_age\tn_train\tn_test\tmicro_auroc\tmicro_aucpr\tstatus\n");
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.min_age,
                c.max_age,
                c.n_train,
                c.n_test,
                f(c.micro_auroc),
                f(c.micro_aucpr),
                c.undefined.as_deref().unwrap_or("ok")
            );
        }
        s
    }
}

fn single_class(x: &SliceTensor) -> bool {
    let p = x.positives();
    p == 0 || p == x.n
}

/// Raw age at index, inclusive on both ends.
fn in_cell(x: &SliceTensor, i: usize, lo: i32, hi: i32) -> bool {
    let age = x.demographics[i][1];
    age >= lo as f64 && age <= hi as f64
}

/// Restricts the cohort to each age cell, retrains the focus model and
/// scores it. Cells without both classes in test, or without training or
/// validation rows, are marked undefined.
pub fn run_age_interval_grid(cohort: &PreparedCohort, cfg: &ExperimentConfig) -> Result<(AgeGridResult, Report)> {
    cfg.validate()?;
    let w = cfg.windows[0];
    let features = FeatureConfig {
        window: w,
        ..cfg.features.clone()
    };
    let cells = cfg.age_grid.cells();
    let mut prepared = Vec::with_capacity(cells.len());
    for &(lo, hi) in &cells {
        let sub = cohort.filter_rows(|_, t, i| in_cell(t, i, lo, hi));
        let data = sub.view(&features)?;
        let reason = if data.train.is_empty() {
            Some("empty training split")
        } else if data.validation.is_empty() {
            Some("empty validation split")
        } else if single_class(&data.test) {
            Some("single class in test")
        } else {
            None
        };
        prepared.push((data, reason));
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .filter(|&c| prepared[c].1.is_none())
        .flat_map(|c| (0..cfg.runs).map(move |r| (c, r)))
        .collect();
    let scored = with_pool(|| {
        jobs.par_iter()
            .map(|&(c, r)| fit_and_score(cfg.focus_model, &prepared[c].0, cfg, &cfg.train_for_run(r)).map(|x| x.2))
            .collect::<Result<Vec<_>>>()
    })??;

    let model = cfg.focus_model.name();
    let mut report = Report::new(ExperimentKind::AgeGrid.name());
    let mut out = Vec::with_capacity(cells.len());
    let mut next = 0;
    for (c, &(lo, hi)) in cells.iter().enumerate() {
        let (data, reason) = &prepared[c];
        let mut cell = AgeCell {
            min_age: lo,
            max_age: hi,
            n_train: data.train.n,
            n_test: data.test.n,
            micro_auroc: None,
            micro_aucpr: None,
            undefined: reason.map(str::to_string),
        };
        if reason.is_none() {
            let runs = &scored[next..next + cfg.runs];
            next += cfg.runs;
            let condition = format!("age-{lo}-{hi}");
            let auroc = ReportRow::new(model, &w.tag(), &condition, "micro_auroc", runs.iter().map(|e| e.micro_auroc).collect());
            let aucpr = ReportRow::new(model, &w.tag(), &condition, "micro_aucpr", runs.iter().map(|e| e.micro_aucpr).collect());
            cell.micro_auroc = Some(auroc.mean);
            cell.micro_aucpr = Some(aucpr.mean);
            report.rows.push(auroc);
            report.rows.push(aucpr);
        } else {
            report.notes.push(format!("age-{lo}-{hi}: undefined ({})", reason.unwrap_or_default()));
        }
        out.push(cell);
    }
    Ok((
        AgeGridResult {
            window: w.tag(),
            model: model.into(),
            runs: cfg.runs,
            cells: out,
        },
        report,
    ))
}
