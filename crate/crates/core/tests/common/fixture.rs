//! Twelve hand-built patients covering every selection branch, with the
//! outcome derived by hand for each.

use chrono::{Duration, NaiveDate};
use seqrisk::cohort::{CodeType, CodedEvent, Label, PatientRecord};

pub fn anchor() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 6, 1).unwrap()
}

fn at(offset: i64) -> NaiveDate {
    anchor() + Duration::days(offset)
}

fn ev(id: &str, offset: i64, code: &str, t: CodeType) -> CodedEvent {
    CodedEvent {
        patient_id: id.into(),
        date: at(offset),
        code: code.into(),
        code_type: t,
    }
}

/// Office visits every 30 days from `-810` to `0`.
fn monthly(id: &str) -> Vec<CodedEvent> {
    (0..28).map(|k| ev(id, -30 * k, "99213", CodeType::Px)).collect()
}

fn chf(id: &str, offsets: &[i64], codes: &[&str]) -> Vec<CodedEvent> {
    offsets
        .iter()
        .zip(codes.iter().cycle())
        .map(|(&o, c)| ev(id, o, c, CodeType::Dx))
        .collect()
}

pub struct Expected {
    pub id: &'static str,
    pub outcome: Option<(Label, NaiveDate)>,
    pub branch: &'static str,
}

pub fn twelve_patients() -> (Vec<PatientRecord>, Vec<CodedEvent>, Vec<Expected>) {
    let mut events = Vec::new();
    let mut patients = Vec::new();
    let mut expected = Vec::new();
    let mut add = |id: &'static str, birth: i32, label: Label, evs: Vec<CodedEvent>, outcome, branch| {
        patients.push(PatientRecord {
            patient_id: id.into(),
            gender: 0,
            birth_year: birth,
            race: 0,
            label,
            index_date: anchor(),
        });
        events.extend(evs);
        expected.push(Expected { id, outcome, branch });
    };
    let case = Some((Label::Case, anchor()));
    let control = Some((Label::Control, anchor()));

    add("P01", 1950, Label::Case, [monthly("P01"), chf("P01", &[0, 30, 170], &["428.0"])].concat(), case, "three outcome days within 183");
    add("P02", 1950, Label::Case, [monthly("P02"), chf("P02", &[0, 100, 200], &["428.0"])].concat(), None, "no 183-day window holds three");
    add("P03", 1950, Label::Control, [monthly("P03"), chf("P03", &[-60, -120], &["401.9"])].concat(), control, "dense encounters, no outcome code");
    add("P04", 1950, Label::Case, [monthly("P04"), chf("P04", &[-400, 0, 10, 20], &["428.0"])].concat(), None, "prior outcome code");
    add("P05", 1950, Label::Case, [monthly("P05"), chf("P05", &[0, 0, 50], &["428.0"])].concat(), None, "repeat same-day codes count once");
    let sparse: Vec<CodedEvent> = monthly("P06")
        .into_iter()
        .filter(|e| {
            let d = (anchor() - e.date).num_days();
            !(365..730).contains(&d)
        })
        .chain([ev("P06", -400, "99213", CodeType::Px), ev("P06", -500, "99213", CodeType::Px)])
        .collect();
    add("P06", 1950, Label::Control, sparse, None, "two encounter days in months 12-24");
    add("P07", 1931, Label::Case, [monthly("P07"), chf("P07", &[0, 30, 60], &["428.0"])].concat(), None, "case aged 85 at index");
    add("P08", 1991, Label::Control, monthly("P08"), None, "control aged 25 at index");
    add("P09", 1950, Label::Control, [monthly("P09"), chf("P09", &[-200], &["425.4"])].concat(), None, "suggestive exclusion code");
    add("P10", 1936, Label::Case, [monthly("P10"), chf("P10", &[0, 20, 40], &["428.1"])].concat(), case, "case aged exactly 80");
    add("P11", 1960, Label::Case, [monthly("P11"), chf("P11", &[0, 60, 182], &["428.0", "428.21", "428.9"])].concat(), case, "sub-codes group to the outcome root; span 182");
    add("P12", 1960, Label::Case, [monthly("P12"), chf("P12", &[0, 90, 183], &["428.0"])].concat(), None, "span of exactly 183 days");
    (patients, events, expected)
}
