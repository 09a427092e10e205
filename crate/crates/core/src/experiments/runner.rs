use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::ReportRow;
use crate::error::{Error, Result};
use crate::features::PreparedData;
use crate::metrics::{evaluate, EvalMetrics};
use crate::models::{fit_model, FittedModel, ModelKind, TrainConfig};

pub const THREADS_ENV: &str = "SEQRISK_THREADS";

/// Metrics emitted per (condition, model) pair, in row order.
pub const REPORTED_METRICS: [&str; 4] = ["micro_auroc", "micro_aucpr", "micro_ap", "recall"];

/// Worker threads for experiment fan-out: `SEQRISK_THREADS`, default 1.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs `f` inside a pool of [`thread_count`] workers. Nested rayon work
/// (forest fitting) stays inside the same pool.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Fits on `train`/`validation` and scores `test`.
pub fn fit_and_score(kind: ModelKind, data: &PreparedData, cfg: &ExperimentConfig, train: &TrainConfig) -> Result<(FittedModel, Vec<[f64; 2]>, EvalMetrics)> {
    let fitted = fit_model(kind, &data.train, &data.validation, &cfg.model, train)?;
    let probs = fitted.predict_proba(&data.test)?;
    let metrics = evaluate(&probs, &data.test.labels)?;
    Ok((fitted, probs, metrics))
}

/// A named tensor set all models are trained on.
pub struct Condition {
    pub name: String,
    pub window: String,
    pub data: PreparedData,
}

/// Every (condition, model, run) job, fanned out over the pool; rows come
/// back in condition, model, metric order regardless of scheduling.
pub fn run_conditions(conditions: &[Condition], models: &[ModelKind], cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let jobs: Vec<(usize, usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..models.len()).flat_map(move |m| (0..cfg.runs).map(move |r| (c, m, r))))
        .collect();
    let results: Vec<EvalMetrics> = with_pool(|| {
        jobs.par_iter()
            .map(|&(c, m, r)| {
                fit_and_score(models[m], &conditions[c].data, cfg, &cfg.train_for_run(r)).map(|(_, _, e)| e)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows = Vec::new();
    for (c, cond) in conditions.iter().enumerate() {
        for (m, kind) in models.iter().enumerate() {
            let base = (c * models.len() + m) * cfg.runs;
            let runs = &results[base..base + cfg.runs];
            rows.extend(metric_rows(kind.name(), &cond.window, &cond.name, runs));
        }
    }
    Ok(rows)
}

pub fn metric_rows(model: &str, window: &str, condition: &str, runs: &[EvalMetrics]) -> Vec<ReportRow> {
    REPORTED_METRICS
        .iter()
        .map(|&metric| {
            let values = runs.iter().map(|e| metric_value(e, metric)).collect();
            ReportRow::new(model, window, condition, metric, values)
        })
        .collect()
}

fn metric_value(e: &EvalMetrics, name: &str) -> f64 {
    let i = EvalMetrics::NAMES.iter().position(|&n| n == name).expect("known metric");
    e.values()[i]
}
