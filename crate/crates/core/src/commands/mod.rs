//! Subcommand bodies. Each reads its inputs, writes its outputs and a
//! `RunManifest`, and returns the manifest. Every table written starts with
//! a `#schema=` line; binary outputs carry the container header.

mod settings;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

pub use settings::{cohort_config, experiment_config, feature_config, model_config, signal_spec, train_config};

use crate::cohort::{generate_synthetic_cohort, CodedEvent, CohortConfig, PatientRecord, SyntheticSignalSpec};
use crate::error::{Error, Result};
use crate::experiments::{
    run_ablations, run_age_interval_grid, run_aggregation_comparison, run_temporal_delta_study, run_window_sweep,
    thread_count, ActivationTable, ExperimentKind, Report, ReportRow,
};
use crate::features::{prepare_cohort, FeatureConfig, ObservationWindow, SliceTensor};
use crate::io::{
    decode_checkpoint, decode_tensor, encode_checkpoint, encode_tensor, read_events, read_patients, write_events,
    write_patients, KvConfig, RunManifest,
};
use crate::metrics::{evaluate, EvalMetrics};
use crate::models::{fit_model, EmbedConfig, FittedModel, ModelConfig, ModelKind, TrainConfig};
use crate::projection::{project_patients, TsneConfig};

pub const TRACE_SCHEMA: &str = "seqrisk.trace/1";
pub const KL_SCHEMA: &str = "seqrisk.kl/1";
pub const SUMMARY_SCHEMA: &str = "seqrisk.summary/1";
pub const TENSOR_EXT: &str = "srsk";

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| Error::Schema(format!("{}: not UTF-8", path.display())))
}

fn write_out(m: &mut RunManifest, path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    m.output(path)
}

fn finish(m: &RunManifest, path: &Path) -> Result<()> {
    fs::write(path, m.to_json()?)?;
    Ok(())
}

fn load_kv(path: Option<&Path>) -> Result<KvConfig> {
    match path {
        Some(p) => KvConfig::parse(&read_text(p)?),
        None => Ok(KvConfig::default()),
    }
}

/// Typed view of a shared config file, minus the experiment keys.
#[derive(Clone, Debug)]
pub struct Settings {
    pub cohort: CohortConfig,
    pub signal: SyntheticSignalSpec,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub patients: Option<PathBuf>,
    pub events: Option<PathBuf>,
}

impl Settings {
    /// `data.*` paths resolve against `base`.
    pub fn from_kv(kv: &KvConfig, base: &Path) -> Result<Self> {
        let path = |k: &str| kv.raw(k).map(|p| base.join(p));
        Ok(Self {
            cohort: cohort_config(kv)?,
            signal: signal_spec(kv)?,
            features: feature_config(kv)?,
            model: model_config(kv)?,
            train: train_config(kv)?,
            patients: path("data.patients"),
            events: path("data.events"),
        })
    }
}

fn config_dir(p: Option<&Path>) -> PathBuf {
    p.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default()
}

pub struct GenerateArgs {
    pub config: PathBuf,
    pub out_dir: PathBuf,
}

/// Writes `patients.tsv`, `events.tsv` and `manifest.json` under `out_dir`.
pub fn generate(a: &GenerateArgs) -> Result<RunManifest> {
    let kv = load_kv(Some(&a.config))?;
    let s = Settings::from_kv(&kv, &config_dir(Some(&a.config)))?;
    kv.finish()?;
    let mut m = RunManifest::new("generate", &kv.canonical(), Some(s.cohort.seed));
    m.input(&a.config)?;
    let (patients, events) = m.time("generate", || generate_synthetic_cohort(&s.cohort, &s.signal))?;
    write_out(&mut m, &a.out_dir.join("patients.tsv"), write_patients(&patients).as_bytes())?;
    write_out(&mut m, &a.out_dir.join("events.tsv"), write_events(&events).as_bytes())?;
    m.detail("patients", patients.len())?;
    m.detail("events", events.len())?;
    finish(&m, &a.out_dir.join("manifest.json"))?;
    Ok(m)
}

fn load_tables(m: &mut RunManifest, patients: &Path, events: &Path) -> Result<(Vec<PatientRecord>, Vec<CodedEvent>)> {
    m.input(patients)?;
    m.input(events)?;
    let p = read_patients(&read_text(patients)?)?;
    let e = read_events(&read_text(events)?)?;
    Ok((p, e))
}

pub struct PrepareArgs {
    pub events: PathBuf,
    pub patients: PathBuf,
    pub window: ObservationWindow,
    pub binarize: bool,
    pub density_min: Option<u32>,
    pub config: Option<PathBuf>,
    pub emb_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub out: PathBuf,
}

/// Tensor file for `split` under prefix `out`.
pub fn tensor_path(out: &Path, split: &str) -> PathBuf {
    sibling(out, &format!(".{split}.{TENSOR_EXT}"))
}

/// Writes `{out}.{train,validation,test}.srsk` and `{out}.manifest.json`.
/// The manifest records the LSTM input shapes implied by the vocabulary.
pub fn prepare(a: &PrepareArgs) -> Result<RunManifest> {
    let kv = load_kv(a.config.as_deref())?;
    let s = Settings::from_kv(&kv, &config_dir(a.config.as_deref()))?;
    kv.finish()?;
    let mut features = FeatureConfig {
        window: a.window,
        ..s.features
    };
    features.binarize |= a.binarize;
    if let Some(d) = a.density_min {
        features.density_min = d;
    }
    let model = ModelConfig {
        emb_dim: a.emb_dim.unwrap_or(s.model.emb_dim),
        hidden: a.hidden.unwrap_or(s.model.hidden),
        ..s.model
    };
    let canonical = format!(
        "{}window = {}\nbinarize = {}\ndensity_min = {}\nemb_dim = {}\nhidden = {}\n",
        kv.canonical(),
        features.window.tag(),
        features.binarize,
        features.density_min,
        model.emb_dim,
        model.hidden
    );
    let mut m = RunManifest::new("prepare", &canonical, Some(s.cohort.seed));
    if let Some(c) = &a.config {
        m.input(c)?;
    }
    let (patients, events) = load_tables(&mut m, &a.patients, &a.events)?;
    let data = m.time("prepare", || {
        prepare_cohort(&patients, &events, &s.cohort, features.variance_threshold)?.view(&features)
    })?;
    for (name, t) in [("train", &data.train), ("validation", &data.validation), ("test", &data.test)] {
        write_out(&mut m, &tensor_path(&a.out, name), &encode_tensor(t)?)?;
        m.detail(&format!("n_{name}"), t.n)?;
    }
    let embed = EmbedConfig::new(model.emb_dim, data.train.v, model.hidden, data.train.t)?;
    m.detail("window", features.window.tag())?;
    m.detail("steps", embed.steps)?;
    m.detail("vocabulary_size", embed.vocab)?;
    m.detail("emb_dim", embed.emb_dim)?;
    m.detail("hidden", embed.hidden)?;
    m.detail("per_step_width", embed.step_width())?;
    m.detail("head_width", embed.head_width())?;
    m.detail("tabular_width", data.train.tabular_width())?;
    m.detail("max_epochs", s.train.max_epochs)?;
    m.detail("diagnostics", &data.diagnostics)?;
    finish(&m, &sibling(&a.out, ".manifest.json"))?;
    Ok(m)
}

fn load_tensor(m: &mut RunManifest, path: &Path) -> Result<SliceTensor> {
    m.input(path)?;
    decode_tensor(&read_bytes(path)?)
}

pub struct TrainArgs {
    pub model: ModelKind,
    pub train: PathBuf,
    pub val: PathBuf,
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

/// Epoch trace of a neural fit, or the estimator sweep of a forest.
pub fn trace_tsv(f: &FittedModel) -> String {
    let mut s = format!("#schema={TRACE_SCHEMA}\n#model={}\n", f.kind());
    if let Some(t) = &f.trace {
        let _ = writeln!(s, "#initial_loss={:.6}\n#best_epoch={}", t.initial_loss, t.best_epoch);
        s.push_str("epoch\ttrain_loss\tval_loss\tval_micro_auroc\n");
        for r in &t.epochs {
            let auc = r.val_micro_auroc.map_or("NA".into(), |v| format!("{v:.6}"));
            let _ = writeln!(s, "{}\t{:.6}\t{:.6}\t{auc}", r.epoch, r.train_loss, r.val_loss);
        }
    } else {
        s.push_str("n_estimators\tval_micro_auroc\n");
        for p in &f.sweep {
            let _ = writeln!(s, "{}\t{:.6}", p.n_estimators, p.validation_micro_auroc);
        }
    }
    s
}

/// Writes the checkpoint at `out`, `{out}.trace.tsv` and `{out}.manifest.json`.
pub fn train(a: &TrainArgs) -> Result<RunManifest> {
    let kv = load_kv(a.config.as_deref())?;
    let s = Settings::from_kv(&kv, &config_dir(a.config.as_deref()))?;
    kv.finish()?;
    let tc = TrainConfig { seed: a.seed, ..s.train };
    let canonical = format!("{}model = {}\nseed = {}\n", kv.canonical(), a.model, a.seed);
    let mut m = RunManifest::new("train", &canonical, Some(a.seed));
    if let Some(c) = &a.config {
        m.input(c)?;
    }
    let train = load_tensor(&mut m, &a.train)?;
    let val = load_tensor(&mut m, &a.val)?;
    if train.vocabulary != val.vocabulary || train.window != val.window {
        return Err(Error::Schema("train and validation tensors differ in vocabulary or window".into()));
    }
    let fitted = m.time("fit", || fit_model(a.model, &train, &val, &s.model, &tc))?;
    write_out(&mut m, &a.out, &encode_checkpoint(&fitted)?)?;
    write_out(&mut m, &sibling(&a.out, ".trace.tsv"), trace_tsv(&fitted).as_bytes())?;
    m.detail("model", a.model.name())?;
    m.detail("window", train.window.tag())?;
    if let Some(t) = &fitted.trace {
        m.detail("best_epoch", t.best_epoch)?;
    }
    finish(&m, &sibling(&a.out, ".manifest.json"))?;
    Ok(m)
}

pub struct EvaluateArgs {
    pub model: PathBuf,
    pub test: PathBuf,
    pub out: PathBuf,
}

/// Writes the metric rows at `out`, `{out}.json` and `{out}.manifest.json`.
pub fn evaluate_checkpoint(a: &EvaluateArgs) -> Result<RunManifest> {
    let mut m = RunManifest::new("evaluate", "", None);
    m.input(&a.model)?;
    let fitted = decode_checkpoint(&read_bytes(&a.model)?)?;
    let test = load_tensor(&mut m, &a.test)?;
    if test.is_empty() {
        return Err(Error::Schema(format!("{}: test tensor holds no patients", a.test.display())));
    }
    let probs = fitted.predict_proba(&test)?;
    let metrics: EvalMetrics = m.time("evaluate", || evaluate(&probs, &test.labels))?;
    let mut report = Report::new("evaluate");
    let (kind, window) = (fitted.kind().name(), test.window.tag());
    for (name, v) in EvalMetrics::NAMES.iter().zip(metrics.values()) {
        report.rows.push(ReportRow::new(kind, &window, "test", name, vec![v]));
    }
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "model": kind,
        "window": window,
        "n": test.n,
        "positives": test.positives(),
        "metrics": metrics,
    });
    write_out(&mut m, &a.out, report.to_tsv().as_bytes())?;
    write_out(&mut m, &sibling(&a.out, ".json"), (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    finish(&m, &sibling(&a.out, ".manifest.json"))?;
    Ok(m)
}

pub struct ExperimentArgs {
    pub kind: ExperimentKind,
    pub config: PathBuf,
    pub out_dir: PathBuf,
}

/// Runs one study on `data.patients`/`data.events`, or on a cohort generated
/// from the same config. Writes `{kind}.tsv`, `{kind}.json`, study-specific
/// plot tables and `{kind}.manifest.json` under `out_dir`.
pub fn experiment(a: &ExperimentArgs) -> Result<RunManifest> {
    let kv = load_kv(Some(&a.config))?;
    let s = Settings::from_kv(&kv, &config_dir(Some(&a.config)))?;
    let cfg = experiment_config(a.kind, &kv)?;
    kv.finish()?;
    let mut m = RunManifest::new("experiment", &kv.canonical(), Some(cfg.seed_base));
    m.input(&a.config)?;
    let (patients, events) = match (&s.patients, &s.events) {
        (Some(p), Some(e)) => load_tables(&mut m, p, e)?,
        (None, None) => m.time("generate", || generate_synthetic_cohort(&s.cohort, &s.signal))?,
        _ => return Err(Error::Config("data.patients and data.events go together".into())),
    };
    let cohort = m.time("prepare", || prepare_cohort(&patients, &events, &s.cohort, cfg.features.variance_threshold))?;
    let out = |suffix: &str| a.out_dir.join(format!("{}{suffix}", a.kind));
    let mut extra = serde_json::Map::new();
    let report = match a.kind {
        ExperimentKind::WindowSweep => m.time("study", || run_window_sweep(&cohort, &cfg))?,
        ExperimentKind::Aggregation => m.time("study", || run_aggregation_comparison(&cohort, &cfg))?,
        ExperimentKind::Ablations => m.time("study", || run_ablations(&cohort, &cfg))?,
        ExperimentKind::AgeGrid => {
            let (grid, report) = m.time("study", || run_age_interval_grid(&cohort, &cfg))?;
            write_out(&mut m, &out(".grid.tsv"), grid.to_tsv().as_bytes())?;
            extra.insert("grid".into(), serde_json::to_value(&grid)?);
            report
        }
        ExperimentKind::TemporalDelta => {
            let study = m.time("study", || run_temporal_delta_study(&cohort, &cfg))?;
            write_out(&mut m, &out(".features.tsv"), study.features.to_tsv().as_bytes())?;
            if let Some(t) = &study.activations {
                write_out(&mut m, &out(".activations.tsv"), t.to_tsv().as_bytes())?;
            }
            extra.insert("delta_status".into(), serde_json::to_value(study.features.status)?);
            extra.insert("flipped".into(), serde_json::to_value(&study.features.flipped)?);
            extra.insert("top_k".into(), serde_json::to_value(&study.features.top_k)?);
            extra.insert("full_auroc".into(), serde_json::to_value(study.full_auroc)?);
            extra.insert("subset_auroc".into(), serde_json::to_value(study.subset_auroc)?);
            study.table
        }
    };
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "experiment": a.kind.name(),
        "config": cfg,
        "cohort": s.cohort,
        "diagnostics": cohort.diagnostics,
        "rows": report.rows,
        "notes": report.notes,
        "extra": extra,
    });
    write_out(&mut m, &out(".tsv"), report.to_tsv().as_bytes())?;
    write_out(&mut m, &out(".json"), (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    m.detail("threads", thread_count()?)?;
    finish(&m, &out(".manifest.json"))?;
    Ok(m)
}

pub struct ProjectArgs {
    pub activations: PathBuf,
    pub paired: Option<PathBuf>,
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: Option<usize>,
    pub out: PathBuf,
}

fn load_activations(m: &mut RunManifest, path: &Path) -> Result<ActivationTable> {
    m.input(path)?;
    ActivationTable::from_tsv(&read_text(path)?)
}

/// Writes coordinates at `out`, the KL trace at `{out}.kl.tsv` and
/// `{out}.manifest.json`.
pub fn project(a: &ProjectArgs) -> Result<RunManifest> {
    let cfg = TsneConfig {
        perplexity: a.perplexity,
        seed: a.seed,
        iterations: a.iterations.unwrap_or(TsneConfig::default().iterations),
        ..TsneConfig::default()
    };
    let canonical = format!("perplexity = {}\nseed = {}\niterations = {}\n", cfg.perplexity, cfg.seed, cfg.iterations);
    let mut m = RunManifest::new("project", &canonical, Some(a.seed));
    let primary = load_activations(&mut m, &a.activations)?;
    let paired = a.paired.as_deref().map(|p| load_activations(&mut m, p)).transpose()?;
    let proj = m.time("tsne", || project_patients(&primary, paired.as_ref(), &cfg))?;
    let mut kl = format!("#schema={KL_SCHEMA}\niteration\tkl\n");
    for (i, v) in proj.kl_trace.iter().enumerate() {
        let _ = writeln!(kl, "{i}\t{v:.9}");
    }
    write_out(&mut m, &a.out, proj.to_tsv().as_bytes())?;
    write_out(&mut m, &sibling(&a.out, ".kl.tsv"), kl.as_bytes())?;
    m.detail("points", proj.patients.len())?;
    finish(&m, &sibling(&a.out, ".manifest.json"))?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_appends() {
        assert_eq!(sibling(Path::new("a/b.ckpt"), ".trace.tsv"), PathBuf::from("a/b.ckpt.trace.tsv"));
        assert_eq!(tensor_path(Path::new("t/x"), "train"), PathBuf::from("t/x.train.srsk"));
    }
}
