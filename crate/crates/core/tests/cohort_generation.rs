use std::collections::BTreeMap;

use seqrisk::cohort::{
    build_cohort, generate_synthetic_cohort, select_cases, select_controls, CohortConfig, Label,
    SyntheticSignalSpec,
};
use seqrisk::features::{group_code, month_offset, TimeSlice};

fn cfg(n: usize, case_fraction: f64, seed: u64) -> CohortConfig {
    CohortConfig {
        n_patients: n,
        case_fraction,
        seed,
        ..CohortConfig::default()
    }
}

#[test]
fn generated_labels_are_recovered() {
    let c = cfg(1500, 0.3, 11);
    let (patients, events) = generate_synthetic_cohort(&c, &SyntheticSignalSpec::default()).unwrap();
    let cases = select_cases(&events, &patients, &c);
    let controls = select_controls(&events, &patients, &c);
    for p in &patients {
        match p.label {
            Label::Case => assert_eq!(cases.get(&p.patient_id), Some(&p.index_date), "{}", p.patient_id),
            Label::Control => assert_eq!(controls.get(&p.patient_id), Some(&p.index_date), "{}", p.patient_id),
        }
    }
    assert!(cases.keys().all(|k| !controls.contains_key(k)));
    let (_, summary) = build_cohort(&patients, &events, &c);
    assert_eq!(summary.label_disagreements, 0);
    assert_eq!(summary.unselected, 0);
    assert_eq!(summary.cases, 450);
}

#[test]
fn generation_is_deterministic() {
    let c = cfg(200, 0.2, 5);
    let s = SyntheticSignalSpec::default();
    assert_eq!(generate_synthetic_cohort(&c, &s).unwrap(), generate_synthetic_cohort(&c, &s).unwrap());
    let other = generate_synthetic_cohort(&cfg(200, 0.2, 6), &s).unwrap();
    assert_ne!(generate_synthetic_cohort(&c, &s).unwrap().1, other.1);
}

/// Per-patient mean risk-code count per slice, split by label.
fn risk_slice_means(n: usize, signal: &SyntheticSignalSpec, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let c = cfg(n, 0.5, seed);
    let (patients, events) = generate_synthetic_cohort(&c, signal).unwrap();
    let index: BTreeMap<&str, _> = patients.iter().map(|p| (p.patient_id.as_str(), p.index_date)).collect();
    let risk: std::collections::BTreeSet<&str> = signal.risk_codes.iter().map(String::as_str).collect();
    let mut per_patient: BTreeMap<&str, f64> = BTreeMap::new();
    for e in &events {
        let before = (index[e.patient_id.as_str()] - e.date).num_days();
        if before < 0 || TimeSlice::for_month(month_offset(before)).is_none() {
            continue;
        }
        if risk.contains(group_code(&e.code, e.code_type)) {
            *per_patient.entry(e.patient_id.as_str()).or_default() += 1.0 / 4.0;
        }
    }
    let mut cases = Vec::new();
    let mut controls = Vec::new();
    for p in &patients {
        let v = per_patient.get(p.patient_id.as_str()).copied().unwrap_or(0.0);
        match p.label {
            Label::Case => cases.push(v),
            Label::Control => controls.push(v),
        }
    }
    (cases, controls)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn multiplier_scales_case_rates() {
    let signal = SyntheticSignalSpec {
        case_multiplier: 3.0,
        ..SyntheticSignalSpec::default()
    };
    let (cases, controls) = risk_slice_means(10_000, &signal, 21);
    let ratio = mean(&cases) / mean(&controls);
    assert!((ratio - 3.0).abs() / 3.0 < 0.05, "ratio {ratio}");
}

#[test]
fn null_signal_is_label_independent() {
    let (cases, controls) = risk_slice_means(10_000, &SyntheticSignalSpec::null(), 22);
    let z = (mean(&cases) - mean(&controls)) / (var(&cases) / cases.len() as f64 + var(&controls) / controls.len() as f64).sqrt();
    assert!(z.abs() < 4.0, "z {z}");
}
