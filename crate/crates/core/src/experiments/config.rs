use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, ObservationWindow};
use crate::models::{ModelConfig, ModelKind, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    WindowSweep,
    Aggregation,
    TemporalDelta,
    AgeGrid,
    Ablations,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::WindowSweep,
        ExperimentKind::Aggregation,
        ExperimentKind::TemporalDelta,
        ExperimentKind::AgeGrid,
        ExperimentKind::Ablations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::WindowSweep => "window-sweep",
            ExperimentKind::Aggregation => "aggregation",
            ExperimentKind::TemporalDelta => "temporal-delta",
            ExperimentKind::AgeGrid => "age-grid",
            ExperimentKind::Ablations => "ablations",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Each set flag yields one ablated condition paired with the baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationFlags {
    pub binarize: bool,
    pub drop_demographics: bool,
    pub drop_procedures: bool,
    /// Minimum encounter days per window slice.
    pub density_min: Option<u32>,
    /// Training-split size after subsampling.
    pub small_cohort: Option<usize>,
    pub rf_top_k: Option<usize>,
    pub delta_top_k: usize,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self {
            binarize: false,
            drop_demographics: false,
            drop_procedures: false,
            density_min: None,
            small_cohort: None,
            rf_top_k: None,
            delta_top_k: 47,
        }
    }
}

/// Inclusive age cells `[min, max]`: `min` runs `min_lo..=min_hi` and `max`
/// runs `min+step..=max_hi`, both in steps of `step`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeGrid {
    pub min_lo: i32,
    pub min_hi: i32,
    pub max_hi: i32,
    pub step: i32,
}

impl Default for AgeGrid {
    fn default() -> Self {
        Self {
            min_lo: 20,
            min_hi: 70,
            max_hi: 80,
            step: 10,
        }
    }
}

impl AgeGrid {
    pub fn cells(&self) -> Vec<(i32, i32)> {
        let mut out = Vec::new();
        let mut lo = self.min_lo;
        while lo <= self.min_hi {
            let mut hi = lo + self.step;
            while hi <= self.max_hi {
                out.push((lo, hi));
                hi += self.step;
            }
            lo += self.step;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Ordered shortest first. The delta study uses the first two.
    pub windows: Vec<ObservationWindow>,
    pub models: Vec<ModelKind>,
    pub runs: usize,
    /// Run `r` trains with seed `seed_base + r`.
    pub seed_base: u64,
    pub ablations: AblationFlags,
    /// Base tensor options; each study overrides the window.
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub age_grid: AgeGrid,
    /// Model retrained per age cell and in the delta study.
    pub focus_model: ModelKind,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        let windows = match experiment {
            ExperimentKind::WindowSweep => ObservationWindow::all().to_vec(),
            ExperimentKind::TemporalDelta => vec![window(1), window(2)],
            _ => vec![window(2)],
        };
        Self {
            experiment,
            windows,
            models: ModelKind::ALL.to_vec(),
            runs: 5,
            seed_base: 1,
            ablations: AblationFlags::default(),
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            age_grid: AgeGrid::default(),
            focus_model: ModelKind::Lstm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.windows.is_empty() {
            return Err(Error::Config("at least one window is required".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model kind is required".into()));
        }
        if self.experiment == ExperimentKind::TemporalDelta {
            if self.windows.len() < 2 || self.windows[0].len() >= self.windows[1].len() {
                return Err(Error::Config("temporal-delta needs a short then a longer window".into()));
            }
            if self.ablations.delta_top_k == 0 {
                return Err(Error::Config("delta_top_k must be positive".into()));
            }
        }
        if self.experiment == ExperimentKind::Aggregation && self.windows[0].len() < 2 {
            return Err(Error::Config("aggregation needs a window of at least two slices".into()));
        }
        if self.age_grid.step <= 0 {
            return Err(Error::Config("age grid step must be positive".into()));
        }
        Ok(())
    }

    /// Training options for run `r`.
    pub fn train_for_run(&self, r: usize) -> TrainConfig {
        TrainConfig {
            seed: self.seed_base + r as u64,
            ..self.train.clone()
        }
    }
}

fn window(len: usize) -> ObservationWindow {
    ObservationWindow::new(len).expect("1..=4")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells() {
        let cells = AgeGrid::default().cells();
        assert_eq!(cells.first(), Some(&(20, 30)));
        assert_eq!(cells.last(), Some(&(70, 80)));
        // 6 + 5 + 4 + 3 + 2 + 1
        assert_eq!(cells.len(), 21);
        assert!(cells.contains(&(20, 80)));
    }

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("sweep".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(ExperimentKind::TemporalDelta);
        c.validate().unwrap();
        c.windows.reverse();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::WindowSweep);
        c.runs = 0;
        assert!(c.validate().is_err());
        assert_eq!(c.train_for_run(3).seed, 4);
    }
}
