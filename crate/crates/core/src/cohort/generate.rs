use chrono::{Datelike, Duration, NaiveDate};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::types::{CodeType, CodedEvent, CohortConfig, Label, PatientRecord};
use crate::error::Result;
use crate::features::time::first_day_of_month;
use crate::numcore::rng::{mix, RngStream};

/// Top-level codes that carry planted risk signal by default.
pub const RISK_CODES: [&str; 47] = [
    "401", "250", "V58", "427", "272", "786", "585", "780", "724", "719", "V45", "285", "729", "496",
    "244", "V76", "278", "I10", "493", "V70", "424", "300", "E11", "E78", "V04", "M54", "Z79", "477",
    "Z00", "Z23", "R06", "R07", "Z36", "S72", "H93", "G45", "J34", "K56", "K31", "S46", "99214",
    "36415", "99213", "90471", "96372", "90686", "96912",
];

/// Procedure code attached to every generated encounter.
pub const VISIT_CODE: &str = "99212";

pub fn risk_code_type(code: &str) -> CodeType {
    if code.len() == 5 && code.bytes().all(|b| b.is_ascii_digit()) {
        CodeType::Px
    } else {
        CodeType::Dx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeRate {
    pub code: String,
    pub code_type: CodeType,
    /// Expected events per 6-month slice.
    pub rate: f64,
}

/// Controls how case patients differ from controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSignalSpec {
    pub risk_codes: Vec<String>,
    /// Expected risk-code events per 6-month slice for a control.
    pub risk_rate: f64,
    /// Case rate multiplier (≥ 1).
    pub case_multiplier: f64,
    /// Per-slice multiplicative increase of case rates toward the index date.
    pub trend_slope: f64,
    /// When set to `k`, case trend weights over the `k` oldest slices are
    /// rescaled to sum to `k`, so the case total over those slices matches
    /// the flat profile in distribution.
    pub total_matched_slices: Option<usize>,
    /// Hurdle mode: a risk code is present in a slice with this probability
    /// for every patient, and present counts are `1 + Poisson(rate)`.
    pub presence_prob: Option<f64>,
    /// Scale the case multiplier linearly with age across the bracket.
    pub age_modulated: bool,
    pub background: Vec<CodeRate>,
    /// Extra encounters per quarter on top of the guaranteed one.
    pub extra_visit_rate: f64,
    pub case_age: (f64, f64),
    pub control_age: (f64, f64),
    /// Male-to-female ratios.
    pub case_male_ratio: f64,
    pub control_male_ratio: f64,
    /// Months of history generated before the index date.
    pub history_months: u32,
    /// Probability that a generated diagnosis carries a sub-code suffix.
    pub subcode_prob: f64,
}

impl Default for SyntheticSignalSpec {
    fn default() -> Self {
        Self {
            risk_codes: RISK_CODES[..20].iter().map(|s| s.to_string()).collect(),
            risk_rate: 0.5,
            case_multiplier: 2.0,
            trend_slope: 1.0,
            total_matched_slices: None,
            presence_prob: None,
            age_modulated: false,
            background: background_codes(40, 0.5, 1.5),
            extra_visit_rate: 0.5,
            case_age: (66.69, 16.3),
            control_age: (56.53, 8.5),
            case_male_ratio: 1.57,
            control_male_ratio: 1.6,
            history_months: 30,
            subcode_prob: 0.5,
        }
    }
}

impl SyntheticSignalSpec {
    /// Every label-dependent knob switched off.
    pub fn null() -> Self {
        let d = Self::default();
        Self {
            case_multiplier: 1.0,
            trend_slope: 1.0,
            case_age: d.control_age,
            case_male_ratio: d.control_male_ratio,
            ..d
        }
    }

    /// Same demographics for cases and controls; signal only in codes.
    pub fn without_demographic_shift(mut self) -> Self {
        self.case_age = self.control_age;
        self.case_male_ratio = self.control_male_ratio;
        self
    }

    /// Case weight for slice `j` (0 = M24 … 3 = M6).
    fn trend_weight(&self, j: usize) -> f64 {
        let s = self.trend_slope;
        match self.total_matched_slices {
            Some(k) if k > 0 && j < k => {
                let norm: f64 = (0..k).map(|i| s.powi(i as i32)).sum();
                s.powi(j as i32) * k as f64 / norm
            }
            Some(_) => 1.0,
            None => s.powi(j as i32 - 3),
        }
    }
}

/// `n` label-independent diagnosis codes with rates evenly spread over `[lo, hi]`.
pub fn background_codes(n: usize, lo: f64, hi: f64) -> Vec<CodeRate> {
    (0..n)
        .map(|i| CodeRate {
            code: format!("B{:03}", i + 1),
            code_type: CodeType::Dx,
            rate: if n > 1 {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            } else {
                lo
            },
        })
        .collect()
}

/// Day-offset bins before the index date, with the slice index used for the
/// case trend weight.
fn generation_bins(history_months: u32) -> Vec<(i64, i64, usize)> {
    // (first day, one-past-last day, trend slice)
    let m = |months: u32| first_day_of_month(months as i64);
    let mut bins = vec![(1, m(3), 3), (m(3), m(9), 3), (m(9), m(15), 2), (m(15), m(21), 1), (m(21), m(27), 0)];
    if history_months > 27 {
        bins.push((m(27), m(history_months), 0));
    }
    bins
}

fn poisson(rate: f64, rng: &mut RngStream) -> u32 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u32
}

fn truncated_normal(mean: f64, std: f64, lo: i32, hi: i32, rng: &mut RngStream) -> i32 {
    for _ in 0..1000 {
        let a = (mean + std * rng.normal()).round() as i32;
        if (lo..=hi).contains(&a) {
            return a;
        }
    }
    mean.round().clamp(lo as f64, hi as f64) as i32
}

const RACE_WEIGHTS: [f64; 10] = [0.6, 0.15, 0.1, 0.05, 0.03, 0.02, 0.02, 0.01, 0.01, 0.01];

fn draw_race(rng: &mut RngStream) -> u8 {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, w) in RACE_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            return i as u8;
        }
    }
    9
}

fn dx_variant(root: &str, code_type: CodeType, prob: f64, rng: &mut RngStream) -> String {
    if code_type == CodeType::Dx && rng.uniform() < prob {
        format!("{root}.{}", rng.below(10))
    } else {
        root.to_string()
    }
}

const LABEL_STREAM: u64 = 0x4C41_4245;
const PATIENT_STREAM: u64 = 0x5041_5449;

/// Generates patients and their dated code events.
///
/// Every patient has at least one encounter per 91-day quarter of history and
/// an encounter on the index date. Cases additionally carry three outcome
/// codes on distinct days inside the 183-day window that starts at the index
/// date, and no outcome code before it.
pub fn generate_synthetic_cohort(
    config: &CohortConfig,
    signal: &SyntheticSignalSpec,
) -> Result<(Vec<PatientRecord>, Vec<CodedEvent>)> {
    config.validate()?;
    let n = config.n_patients;
    let n_cases = ((n as f64) * config.case_fraction).round() as usize;
    let mut is_case: Vec<bool> = (0..n).map(|i| i < n_cases).collect();
    RngStream::new(config.seed, LABEL_STREAM).shuffle(&mut is_case);

    let bins = generation_bins(signal.history_months);
    let history_days = first_day_of_month(signal.history_months as i64);
    let base_date = NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date");

    let mut patients = Vec::with_capacity(n);
    let mut events = Vec::new();
    for (i, &case) in is_case.iter().enumerate() {
        let mut rng = RngStream::new(config.seed, mix(PATIENT_STREAM, i as u64));
        let id = format!("P{:07}", i + 1);
        let label = if case { Label::Case } else { Label::Control };
        let (age_mean, age_std) = if case { signal.case_age } else { signal.control_age };
        let ratio = if case {
            signal.case_male_ratio
        } else {
            signal.control_male_ratio
        };
        let age = truncated_normal(age_mean, age_std, config.age_min, config.age_max, &mut rng);
        let gender = u8::from(rng.uniform() < ratio / (1.0 + ratio));
        let race = draw_race(&mut rng);
        let index_date = base_date + Duration::days(rng.below(730) as i64);
        patients.push(PatientRecord {
            patient_id: id.clone(),
            gender,
            birth_year: index_date.year() - age,
            race,
            label,
            index_date,
        });

        // encounter days, as offsets before the index date
        let mut visits: Vec<i64> = vec![0];
        let mut q_start = 1;
        while q_start <= history_days {
            let q_end = (q_start + 91).min(history_days + 1);
            let k = 1 + poisson(signal.extra_visit_rate, &mut rng);
            for _ in 0..k {
                visits.push(q_start + rng.below((q_end - q_start) as usize) as i64);
            }
            q_start += 91;
        }
        visits.sort_unstable();
        visits.dedup();

        let mut push = |offset: i64, code: String, code_type: CodeType| {
            events.push(CodedEvent {
                patient_id: id.clone(),
                date: index_date - Duration::days(offset),
                code,
                code_type,
            });
        };
        for &v in &visits {
            push(v, VISIT_CODE.to_string(), CodeType::Px);
        }

        let strength = if signal.age_modulated && config.age_max > config.age_min {
            (age - config.age_min) as f64 / (config.age_max - config.age_min) as f64
        } else {
            1.0
        };
        let multiplier = 1.0 + (signal.case_multiplier - 1.0) * strength;

        for &(lo, hi, slice) in &bins {
            let in_bin: Vec<i64> = visits.iter().copied().filter(|&d| d >= lo && d < hi).collect();
            if in_bin.is_empty() {
                continue;
            }
            let mut place = |count: u32, code: &str, code_type: CodeType, rng: &mut RngStream| {
                for _ in 0..count {
                    let day = in_bin[rng.below(in_bin.len())];
                    let c = dx_variant(code, code_type, signal.subcode_prob, rng);
                    push(day, c, code_type);
                }
            };
            for bg in &signal.background {
                let c = poisson(bg.rate, &mut rng);
                place(c, &bg.code, bg.code_type, &mut rng);
            }
            let rate = if case {
                signal.risk_rate * multiplier * signal.trend_weight(slice)
            } else {
                signal.risk_rate
            };
            for code in &signal.risk_codes {
                let c = match signal.presence_prob {
                    Some(q) => {
                        if rng.uniform() < q {
                            1 + poisson(rate, &mut rng)
                        } else {
                            0
                        }
                    }
                    None => poisson(rate, &mut rng),
                };
                place(c, code, risk_code_type(code), &mut rng);
            }
        }

        if case {
            let a = 1 + rng.below(90) as i64;
            let b = a + 1 + rng.below(90) as i64;
            for offset in [0, -a, -b] {
                let code = format!("{}.{}", config.chf_root, rng.below(10));
                push(offset, code, CodeType::Dx);
            }
        }
    }
    events.sort();
    Ok((patients, events))
}
