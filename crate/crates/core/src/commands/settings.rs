//! Mapping from `key = value` configs onto the typed configs. Keys are
//! grouped by prefix: `cohort.`, `signal.`, `features.`, `model.`,
//! `train.`, `experiment.`, `ablate.`, `age_grid.` and `data.`.

use crate::cohort::{background_codes, CohortConfig, SplitFractions, SyntheticSignalSpec, RISK_CODES};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, ExperimentKind};
use crate::features::{FeatureConfig, ObservationWindow};
use crate::io::KvConfig;
use crate::models::{ModelConfig, TrainConfig};

fn pair<T: Copy + std::str::FromStr>(kv: &KvConfig, key: &str, slot: &mut [T; 2]) -> Result<()> {
    if let Some(v) = kv.list::<T>(key)? {
        *slot = v
            .try_into()
            .map_err(|_| Error::Config(format!("`{key}` takes exactly two values")))?;
    }
    Ok(())
}

pub fn cohort_config(kv: &KvConfig) -> Result<CohortConfig> {
    let mut c = CohortConfig::default();
    kv.set("cohort.n_patients", &mut c.n_patients)?;
    kv.set("cohort.case_fraction", &mut c.case_fraction)?;
    kv.set("cohort.age_min", &mut c.age_min)?;
    kv.set("cohort.age_max", &mut c.age_max)?;
    kv.set("cohort.chf_root", &mut c.chf_root)?;
    if let Some(v) = kv.list("cohort.exclusion_roots")? {
        c.exclusion_roots = v;
    }
    kv.set("cohort.case_window_days", &mut c.case_window_days)?;
    kv.set("cohort.case_min_events", &mut c.case_min_events)?;
    kv.set("cohort.control_interval_days", &mut c.control_interval_days)?;
    kv.set("cohort.control_min_encounters", &mut c.control_min_encounters)?;
    kv.set("cohort.control_horizon_months", &mut c.control_horizon_months)?;
    if let Some(v) = kv.list::<f64>("cohort.splits")? {
        let [a, b, t]: [f64; 3] = v
            .try_into()
            .map_err(|_| Error::Config("`cohort.splits` takes train,validation,test".into()))?;
        c.splits = SplitFractions::new(a, b, t)?;
    }
    kv.set("cohort.seed", &mut c.seed)?;
    c.validate()?;
    Ok(c)
}

pub fn signal_spec(kv: &KvConfig) -> Result<SyntheticSignalSpec> {
    let mut s = match kv.raw("signal.preset").unwrap_or("default") {
        "default" => SyntheticSignalSpec::default(),
        "null" => SyntheticSignalSpec::null(),
        other => return Err(Error::Config(format!("unknown signal preset `{other}`"))),
    };
    if let Some(n) = kv.get::<usize>("signal.risk_codes")? {
        if n > RISK_CODES.len() {
            return Err(Error::Config(format!("at most {} risk codes", RISK_CODES.len())));
        }
        s.risk_codes = RISK_CODES[..n].iter().map(|c| c.to_string()).collect();
    }
    kv.set("signal.risk_rate", &mut s.risk_rate)?;
    kv.set("signal.case_multiplier", &mut s.case_multiplier)?;
    kv.set("signal.trend_slope", &mut s.trend_slope)?;
    if let Some(k) = kv.get::<usize>("signal.total_matched_slices")? {
        s.total_matched_slices = Some(k);
    }
    if let Some(p) = kv.get::<f64>("signal.presence_prob")? {
        s.presence_prob = Some(p);
    }
    kv.set("signal.age_modulated", &mut s.age_modulated)?;
    let n_bg = kv.get::<usize>("signal.background_codes")?;
    let lo = kv.get::<f64>("signal.background_rate_min")?;
    let hi = kv.get::<f64>("signal.background_rate_max")?;
    if n_bg.is_some() || lo.is_some() || hi.is_some() {
        s.background = background_codes(n_bg.unwrap_or(s.background.len()), lo.unwrap_or(0.5), hi.unwrap_or(1.5));
    }
    kv.set("signal.extra_visit_rate", &mut s.extra_visit_rate)?;
    kv.set("signal.history_months", &mut s.history_months)?;
    kv.set("signal.subcode_prob", &mut s.subcode_prob)?;
    if !kv.get::<bool>("signal.demographic_shift")?.unwrap_or(true) {
        s = s.without_demographic_shift();
    }
    Ok(s)
}

pub fn feature_config(kv: &KvConfig) -> Result<FeatureConfig> {
    let mut f = FeatureConfig::default();
    kv.set("features.window", &mut f.window)?;
    kv.set("features.binarize", &mut f.binarize)?;
    kv.set("features.density_min", &mut f.density_min)?;
    kv.set("features.variance_threshold", &mut f.variance_threshold)?;
    kv.set("features.age_zscore", &mut f.age_zscore)?;
    Ok(f)
}

pub fn model_config(kv: &KvConfig) -> Result<ModelConfig> {
    let mut m = ModelConfig::default();
    kv.set("model.emb_dim", &mut m.emb_dim)?;
    kv.set("model.hidden", &mut m.hidden)?;
    kv.set("model.input_dropout", &mut m.input_dropout)?;
    pair(kv, "model.mlp_hidden", &mut m.mlp_hidden)?;
    pair(kv, "model.mlp_dropout", &mut m.mlp_dropout)?;
    kv.set("model.emb_mlp_hidden", &mut m.emb_mlp_hidden)?;
    if let Some(v) = kv.list("model.cnn_widths")? {
        m.cnn_widths = v;
    }
    kv.set("model.cnn_channels", &mut m.cnn_channels)?;
    if let Some(v) = kv.list("model.rf_grid")? {
        m.rf_grid = v;
    }
    Ok(m)
}

pub fn train_config(kv: &KvConfig) -> Result<TrainConfig> {
    let mut t = TrainConfig::default();
    kv.set("train.batch_size", &mut t.batch_size)?;
    kv.set("train.learning_rate", &mut t.learning_rate)?;
    kv.set("train.max_epochs", &mut t.max_epochs)?;
    kv.set("train.seed", &mut t.seed)?;
    if let Some(p) = kv.get::<usize>("train.patience")? {
        t.patience = Some(p);
    }
    if t.batch_size == 0 || t.max_epochs == 0 {
        return Err(Error::Config("batch_size and max_epochs must be positive".into()));
    }
    Ok(t)
}

/// `experiment.windows` separates windows with `;`, e.g. `24 ; 24,18`.
pub fn experiment_config(kind: ExperimentKind, kv: &KvConfig) -> Result<ExperimentConfig> {
    let mut e = ExperimentConfig::new(kind);
    if let Some(w) = kv.raw("experiment.windows") {
        e.windows = w
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<ObservationWindow>)
            .collect::<Result<_>>()?;
    }
    if let Some(m) = kv.list("experiment.models")? {
        e.models = m;
    }
    kv.set("experiment.runs", &mut e.runs)?;
    kv.set("experiment.seed_base", &mut e.seed_base)?;
    kv.set("experiment.focus_model", &mut e.focus_model)?;

    let a = &mut e.ablations;
    kv.set("ablate.binarize", &mut a.binarize)?;
    kv.set("ablate.drop_demographics", &mut a.drop_demographics)?;
    kv.set("ablate.drop_procedures", &mut a.drop_procedures)?;
    if let Some(v) = kv.get("ablate.density_min")? {
        a.density_min = Some(v);
    }
    if let Some(v) = kv.get("ablate.small_cohort")? {
        a.small_cohort = Some(v);
    }
    if let Some(v) = kv.get("ablate.rf_top_k")? {
        a.rf_top_k = Some(v);
    }
    kv.set("ablate.delta_top_k", &mut a.delta_top_k)?;

    let g = &mut e.age_grid;
    kv.set("age_grid.min_lo", &mut g.min_lo)?;
    kv.set("age_grid.min_hi", &mut g.min_hi)?;
    kv.set("age_grid.max_hi", &mut g.max_hi)?;
    kv.set("age_grid.step", &mut g.step)?;

    e.features = feature_config(kv)?;
    e.model = model_config(kv)?;
    e.train = train_config(kv)?;
    e.validate()?;
    Ok(e)
}
