use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use super::types::{CodeType, CodedEvent, CohortConfig, Label, PatientRecord};
use crate::features::concept::group_code;
use crate::features::time::first_day_of_month;

/// Selected patient id → index date.
pub type IndexDates = BTreeMap<String, NaiveDate>;

fn events_by_patient(events: &[CodedEvent]) -> BTreeMap<&str, Vec<&CodedEvent>> {
    let mut by: BTreeMap<&str, Vec<&CodedEvent>> = BTreeMap::new();
    for e in events {
        by.entry(e.patient_id.as_str()).or_default().push(e);
    }
    by
}

fn in_bracket(p: &PatientRecord, index: NaiveDate, cfg: &CohortConfig) -> bool {
    (cfg.age_min..=cfg.age_max).contains(&p.age_at(index))
}

fn has_root(e: &CodedEvent, root: &str) -> bool {
    e.code_type == CodeType::Dx && group_code(&e.code, e.code_type) == root
}

/// Patients whose first outcome-family diagnosis day starts a
/// `case_window_days` window holding at least `case_min_events` distinct
/// outcome days. The index date is that first day.
pub fn select_cases(events: &[CodedEvent], patients: &[PatientRecord], cfg: &CohortConfig) -> IndexDates {
    let by = events_by_patient(events);
    let mut out = IndexDates::new();
    for p in patients {
        let Some(evs) = by.get(p.patient_id.as_str()) else {
            continue;
        };
        let days: BTreeSet<NaiveDate> = evs
            .iter()
            .filter(|e| has_root(e, &cfg.chf_root))
            .map(|e| e.date)
            .collect();
        let days: Vec<NaiveDate> = days.into_iter().collect();
        let need = cfg.case_min_events.max(1);
        if days.len() < need {
            continue;
        }
        let first = days[0];
        if (days[need - 1] - first).num_days() < cfg.case_window_days && in_bracket(p, first, cfg) {
            out.insert(p.patient_id.clone(), first);
        }
    }
    out
}

/// Patients with no exclusion-root diagnosis ever and at least
/// `control_min_encounters` encounter days in each full trailing
/// `control_interval_days` block within the horizon. The index date is the
/// last recorded encounter.
pub fn select_controls(events: &[CodedEvent], patients: &[PatientRecord], cfg: &CohortConfig) -> IndexDates {
    let by = events_by_patient(events);
    let horizon = first_day_of_month(cfg.control_horizon_months as i64);
    let blocks = if cfg.control_interval_days > 0 {
        horizon / cfg.control_interval_days
    } else {
        0
    };
    let mut out = IndexDates::new();
    for p in patients {
        let Some(evs) = by.get(p.patient_id.as_str()) else {
            continue;
        };
        if evs
            .iter()
            .any(|e| cfg.exclusion_roots.iter().any(|r| has_root(e, r)))
        {
            continue;
        }
        let days: BTreeSet<NaiveDate> = evs.iter().map(|e| e.date).collect();
        let Some(&index) = days.iter().next_back() else {
            continue;
        };
        let mut counts = vec![0usize; blocks as usize];
        for d in &days {
            let b = (index - *d).num_days() / cfg.control_interval_days.max(1);
            if b < blocks {
                counts[b as usize] += 1;
            }
        }
        if counts.iter().all(|&c| c >= cfg.control_min_encounters) && in_bracket(p, index, cfg) {
            out.insert(p.patient_id.clone(), index);
        }
    }
    out
}

/// Per-rule tallies from [`build_cohort`].
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SelectionSummary {
    pub input_patients: usize,
    pub cases: usize,
    pub controls: usize,
    pub unselected: usize,
    /// Selected patients whose recorded label disagrees with the rules.
    pub label_disagreements: usize,
}

/// Applies both rule sets and returns the selected patients, relabelled and
/// re-indexed by the rules, sorted by id.
pub fn build_cohort(
    patients: &[PatientRecord],
    events: &[CodedEvent],
    cfg: &CohortConfig,
) -> (Vec<PatientRecord>, SelectionSummary) {
    let cases = select_cases(events, patients, cfg);
    let controls = select_controls(events, patients, cfg);
    let mut summary = SelectionSummary {
        input_patients: patients.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for p in patients {
        let (label, index) = if let Some(&d) = cases.get(&p.patient_id) {
            (Label::Case, d)
        } else if let Some(&d) = controls.get(&p.patient_id) {
            (Label::Control, d)
        } else {
            summary.unselected += 1;
            continue;
        };
        match label {
            Label::Case => summary.cases += 1,
            Label::Control => summary.controls += 1,
        }
        if label != p.label {
            summary.label_disagreements += 1;
        }
        out.push(PatientRecord {
            label,
            index_date: index,
            ..p.clone()
        });
    }
    out.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, 6, 1).unwrap()
    }

    fn patient(id: &str) -> PatientRecord {
        PatientRecord {
            patient_id: id.into(),
            gender: 0,
            birth_year: 1956,
            race: 0,
            label: Label::Case,
            index_date: d0(),
        }
    }

    fn ev(id: &str, day: i64, code: &str) -> CodedEvent {
        CodedEvent {
            patient_id: id.into(),
            date: d0() + Duration::days(day),
            code: code.into(),
            code_type: CodeType::Dx,
        }
    }

    #[test]
    fn case_windows() {
        let cfg = CohortConfig::default();
        let ps = [patient("a"), patient("b"), patient("c")];
        let mut evs = vec![
            ev("a", 170, "428.0"),
            ev("a", 0, "428.1"),
            ev("a", 30, "428"),
            ev("b", 0, "428.0"),
            ev("b", 100, "428.0"),
            ev("b", 200, "428.0"),
            ev("c", 0, "401.1"),
        ];
        let got = select_cases(&evs, &ps, &cfg);
        assert_eq!(got.len(), 1);
        assert_eq!(got["a"], d0());
        evs.reverse();
        assert_eq!(select_cases(&evs, &ps, &cfg), got);
    }

    #[test]
    fn same_day_counts_once() {
        let cfg = CohortConfig::default();
        let evs = vec![ev("a", 0, "428.0"), ev("a", 0, "428.1"), ev("a", 10, "428.0")];
        assert!(select_cases(&evs, &[patient("a")], &cfg).is_empty());
    }

    #[test]
    fn monthly_control() {
        let cfg = CohortConfig::default();
        let evs: Vec<_> = (0..27).map(|m| ev("a", m * 30, "401")).collect();
        let got = select_controls(&evs, &[patient("a")], &cfg);
        assert_eq!(got["a"], d0() + Duration::days(26 * 30));

        let mut bad = evs.clone();
        bad.push(ev("a", 5, "428.9"));
        assert!(select_controls(&bad, &[patient("a")], &cfg).is_empty());
    }

    #[test]
    fn sparse_second_year_fails() {
        let cfg = CohortConfig::default();
        // last visit on day 720; days 720-365.. hold only 2 encounter days
        let mut evs: Vec<_> = (0..12).map(|m| ev("a", 720 - m * 30, "401")).collect();
        evs.push(ev("a", 720 - 400, "401"));
        evs.push(ev("a", 720 - 500, "401"));
        assert!(select_controls(&evs, &[patient("a")], &cfg).is_empty());
        evs.push(ev("a", 720 - 600, "401"));
        assert_eq!(select_controls(&evs, &[patient("a")], &cfg).len(), 1);
    }
}
