use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CodeType {
    #[serde(rename = "DX")]
    Dx,
    #[serde(rename = "PX")]
    Px,
}

impl fmt::Display for CodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeType::Dx => "DX",
            CodeType::Px => "PX",
        })
    }
}

impl FromStr for CodeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DX" => Ok(CodeType::Dx),
            "PX" => Ok(CodeType::Px),
            other => Err(Error::Schema(format!("unknown code type `{other}`"))),
        }
    }
}

/// One dated diagnosis or procedure code.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodedEvent {
    pub patient_id: String,
    pub date: NaiveDate,
    pub code: String,
    pub code_type: CodeType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Case,
    Control,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Case => 1,
            Label::Control => 0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Case => "case",
            Label::Control => "control",
        })
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case" => Ok(Label::Case),
            "control" => Ok(Label::Control),
            other => Err(Error::Schema(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatientRecord {
    pub patient_id: String,
    /// 0/1
    pub gender: u8,
    pub birth_year: i32,
    /// 0..10
    pub race: u8,
    pub label: Label,
    pub index_date: NaiveDate,
}

impl PatientRecord {
    /// Index year minus birth year.
    pub fn age_at(&self, date: NaiveDate) -> i32 {
        use chrono::Datelike;
        date.year() - self.birth_year
    }

    pub fn age_at_index(&self) -> i32 {
        self.age_at(self.index_date)
    }
}

/// Train / validation / test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let f = Self {
            train,
            validation,
            test,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {parts:?} must be in [0,1] and sum to 1"
            )));
        }
        Ok(())
    }
}

impl Default for SplitFractions {
    /// 164,459 / 8,656 / 43,279 of 216,394 patients.
    fn default() -> Self {
        Self {
            train: 0.76,
            validation: 0.04,
            test: 0.20,
        }
    }
}

/// Cohort size, selection rules, splits and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_patients: usize,
    pub case_fraction: f64,
    pub age_min: i32,
    pub age_max: i32,
    /// Grouped root identifying the outcome family (e.g. `428`).
    pub chf_root: String,
    /// Grouped roots whose presence excludes a control; includes the outcome root.
    pub exclusion_roots: Vec<String>,
    /// Window, in days, that must hold `case_min_events` distinct outcome days.
    pub case_window_days: i64,
    pub case_min_events: usize,
    pub control_interval_days: i64,
    pub control_min_encounters: usize,
    /// How far back, in months, the control density rule looks.
    pub control_horizon_months: u32,
    pub splits: SplitFractions,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_patients: 2_000,
            case_fraction: 0.099,
            age_min: 30,
            age_max: 80,
            chf_root: "428".into(),
            exclusion_roots: vec!["428".into(), "425".into()],
            case_window_days: 183,
            case_min_events: 3,
            control_interval_days: 365,
            control_min_encounters: 3,
            control_horizon_months: 27,
            splits: SplitFractions::default(),
            seed: 1,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.case_fraction > 0.0 && self.case_fraction < 1.0) {
            return Err(Error::Config(format!(
                "case_fraction {} outside (0,1)",
                self.case_fraction
            )));
        }
        if self.age_min > self.age_max {
            return Err(Error::Config("age_min > age_max".into()));
        }
        self.splits.validate()
    }
}
