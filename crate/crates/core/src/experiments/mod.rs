//! Study orchestration over the model zoo.
//!
//! Every study trains independent (condition, model, seed) jobs on a pool
//! capped by `SEQRISK_THREADS` and assembles its report in a fixed order,
//! so the same config and seeds give byte-identical tables at any thread
//! count. Paired conditions always share one split assignment.

mod activations;
mod age_grid;
mod config;
mod delta;
mod report;
mod runner;
mod studies;

pub use activations::{export_dense_activations, predicted_class, ActivationTable, Comparison, Confusion, ACTIVATION_SCHEMA};
pub use age_grid::{run_age_interval_grid, AgeCell, AgeGridResult, GRID_SCHEMA};
pub use config::{AblationFlags, AgeGrid, ExperimentConfig, ExperimentKind};
pub use delta::{
    concept_deltas, flipped_patients, rank_by_abs_delta, run_temporal_delta_study, ConceptDelta, DeltaFeatureReport,
    DeltaStatus, DeltaStudy, DELTA_SCHEMA, FLIP_READING,
};
pub use report::{Report, ReportRow, REPORT_SCHEMA};
pub use runner::{fit_and_score, metric_rows, run_conditions, thread_count, with_pool, Condition, REPORTED_METRICS, THREADS_ENV};
pub use studies::{
    forest_concept_ranking, run_ablations, run_aggregation_comparison, run_window_sweep, subsample_rows, SUBSAMPLE_STREAM,
};
