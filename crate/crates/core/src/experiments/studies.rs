use super::config::{ExperimentConfig, ExperimentKind};
use super::report::Report;
use super::runner::{fit_and_score, run_conditions, with_pool, Condition};
use crate::cohort::Split;
use crate::error::{Error, Result};
use crate::features::{aggregate_slices, FeatureConfig, PreparedCohort, PreparedData, SliceTensor, DEMO_WIDTH};
use crate::models::{Model, ModelKind};
use crate::numcore::RngStream;

pub const SUBSAMPLE_STREAM: u64 = 0x5355_4253;

fn features_for(cfg: &ExperimentConfig, window: crate::features::ObservationWindow) -> FeatureConfig {
    FeatureConfig {
        window,
        ..cfg.features.clone()
    }
}

fn map_splits(d: &PreparedData, f: impl Fn(&SliceTensor) -> SliceTensor) -> PreparedData {
    PreparedData {
        train: f(&d.train),
        validation: f(&d.validation),
        test: f(&d.test),
        vocabulary: d.vocabulary.clone(),
        diagnostics: d.diagnostics.clone(),
    }
}

/// Every model kind on each window, sliced input.
pub fn run_window_sweep(cohort: &PreparedCohort, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let conditions = cfg
        .windows
        .iter()
        .map(|&w| {
            Ok(Condition {
                name: "sliced".into(),
                window: w.tag(),
                data: cohort.view(&features_for(cfg, w))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new(ExperimentKind::WindowSweep.name());
    report.rows = run_conditions(&conditions, &cfg.models, cfg)?;
    Ok(report)
}

/// Every model kind on the two-slice window, sliced and summed.
pub fn run_aggregation_comparison(cohort: &PreparedCohort, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let w = cfg.windows[0];
    let sliced = cohort.view(&features_for(cfg, w))?;
    let aggregated = map_splits(&sliced, aggregate_slices);
    let conditions = vec![
        Condition {
            name: "sliced".into(),
            window: w.tag(),
            data: sliced,
        },
        Condition {
            name: "aggregated".into(),
            window: w.tag(),
            data: aggregated,
        },
    ];
    let mut report = Report::new(ExperimentKind::Aggregation.name());
    report.rows = run_conditions(&conditions, &cfg.models, cfg)?;
    Ok(report)
}

/// Concept columns ranked by forest importance summed over slices,
/// descending; ties keep column order.
pub fn forest_concept_ranking(importance: &[f64], t: usize, v: usize) -> Vec<usize> {
    assert_eq!(importance.len(), t * v + DEMO_WIDTH, "importance width");
    let score: Vec<f64> = (0..v).map(|c| (0..t).map(|s| importance[s * v + c]).sum()).collect();
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order
}

/// Training rows kept by the small-cohort ablation.
pub fn subsample_rows(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    if size >= n {
        return rows;
    }
    RngStream::new(seed, SUBSAMPLE_STREAM).shuffle(&mut rows);
    rows.truncate(size);
    rows.sort_unstable();
    rows
}

/// The baseline plus one paired condition per set flag, all on one split.
pub fn run_ablations(cohort: &PreparedCohort, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let w = cfg.windows[0];
    let base_features = features_for(cfg, w);
    let baseline = cohort.view(&base_features)?;
    let flags = &cfg.ablations;
    let mut report = Report::new(ExperimentKind::Ablations.name());

    let mut conditions = Vec::new();
    let mut push = |name: String, data: PreparedData| {
        conditions.push(Condition {
            name,
            window: w.tag(),
            data,
        })
    };
    if flags.drop_demographics {
        push("drop-demographics".into(), map_splits(&baseline, SliceTensor::without_demographics));
    }
    if flags.drop_procedures {
        push("drop-procedures".into(), map_splits(&baseline, SliceTensor::without_procedures));
    }
    if flags.binarize {
        push(
            "binarize".into(),
            cohort.view(&FeatureConfig {
                binarize: true,
                ..base_features.clone()
            })?,
        );
    }
    if let Some(size) = flags.small_cohort {
        let rows = subsample_rows(cohort.full[&Split::Train].n, size, cfg.seed_base);
        let keep: std::collections::HashSet<usize> = rows.into_iter().collect();
        let small = cohort.filter_rows(|s, _, i| s != Split::Train || keep.contains(&i));
        push(format!("small-cohort-{size}"), small.view(&base_features)?);
    }
    if let Some(k) = flags.rf_top_k {
        let (fitted, _, _) = with_pool(|| fit_and_score(ModelKind::Rf, &baseline, cfg, &cfg.train_for_run(0)))??;
        let Model::Rf(forest) = &fitted.model else {
            unreachable!("forest requested")
        };
        let ranking = forest_concept_ranking(&forest.feature_importance(), baseline.train.t, baseline.train.v);
        let mut top: Vec<usize> = ranking.into_iter().take(k).collect();
        top.sort_unstable();
        report.notes.push(format!(
            "rf-top-{k} concepts: {}",
            top.iter()
                .map(|&c| baseline.vocabulary.concepts[c].code.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ));
        push(format!("rf-top-{k}"), map_splits(&baseline, |t| t.select_concepts(&top)));
    }
    if let Some(min) = flags.density_min {
        let data = cohort.view(&FeatureConfig {
            density_min: min,
            ..base_features.clone()
        })?;
        if data.train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        push(format!("density-min-{min}"), data);
    }
    if conditions.is_empty() {
        return Err(Error::Config("ablations: no flag set".into()));
    }
    conditions.insert(
        0,
        Condition {
            name: "baseline".into(),
            window: w.tag(),
            data: baseline,
        },
    );
    report.rows = run_conditions(&conditions, &cfg.models, cfg)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_ranking_sums_slices() {
        // t = 2, v = 3: concept 2 totals 0.5, concept 0 totals 0.3, concept 1 totals 0.1
        let mut imp = vec![0.1, 0.0, 0.2, 0.2, 0.1, 0.3];
        imp.extend([0.0; DEMO_WIDTH]);
        assert_eq!(forest_concept_ranking(&imp, 2, 3), vec![2, 0, 1]);
    }

    #[test]
    fn subsample_is_sorted_and_sized() {
        let r = subsample_rows(100, 10, 3);
        assert_eq!(r.len(), 10);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r, subsample_rows(100, 10, 3));
        assert_eq!(subsample_rows(5, 10, 3), vec![0, 1, 2, 3, 4]);
    }
}
