//! Tab-separated patient and event tables. Each file opens with a
//! `#schema=<name>/<version>` line followed by a fixed header row.

use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::cohort::{CodedEvent, PatientRecord};
use crate::error::{Error, Result};

pub const PATIENTS_SCHEMA: &str = "seqrisk.patients/1";
pub const EVENTS_SCHEMA: &str = "seqrisk.events/1";
pub const PATIENT_COLUMNS: [&str; 6] = ["patient_id", "gender", "birth_year", "race", "label", "index_date"];
pub const EVENT_COLUMNS: [&str; 4] = ["patient_id", "date", "code", "code_type"];

pub fn write_patients(patients: &[PatientRecord]) -> String {
    let mut s = format!("#schema={PATIENTS_SCHEMA}\n{}\n", PATIENT_COLUMNS.join("\t"));
    for p in patients {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.patient_id, p.gender, p.birth_year, p.race, p.label, p.index_date
        );
    }
    s
}

pub fn write_events(events: &[CodedEvent]) -> String {
    let mut s = format!("#schema={EVENTS_SCHEMA}\n{}\n", EVENT_COLUMNS.join("\t"));
    for e in events {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", e.patient_id, e.date, e.code, e.code_type);
    }
    s
}

/// Checks the schema line and header; returns data rows with 1-based line
/// numbers.
pub fn table_rows<'a>(text: &'a str, schema: &str, columns: &[&str]) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).unwrap_or("");
    let marker = first
        .strip_prefix("#schema=")
        .ok_or_else(|| Error::Schema(format!("missing #schema={schema} marker")))?;
    if marker != schema {
        let (name, _) = schema.split_once('/').expect("versioned schema");
        return Err(Error::Schema(if marker.starts_with(name) {
            format!("unsupported version `{marker}`, expected `{schema}`")
        } else {
            format!("expected schema `{schema}`, found `{marker}`")
        }));
    }
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Schema("missing header row".into()))?
        .1
        .split('\t')
        .collect();
    if header != columns {
        return Err(Error::Schema(format!("header must be `{}`", columns.join(","))));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != columns.len() {
            return Err(Error::Schema(format!(
                "line {}: {} fields, expected {}",
                i + 1,
                f.len(),
                columns.len()
            )));
        }
        rows.push((i + 1, f));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(v: &str, line: usize, column: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Schema(format!("line {line}: invalid {column} `{v}`")))
}

fn date(v: &str, line: usize, column: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| Error::Schema(format!("line {line}: invalid {column} `{v}`")))
}

pub fn read_patients(text: &str) -> Result<Vec<PatientRecord>> {
    let mut seen = std::collections::HashSet::new();
    table_rows(text, PATIENTS_SCHEMA, &PATIENT_COLUMNS)?
        .into_iter()
        .map(|(line, f)| {
            if f[0].is_empty() || !seen.insert(f[0]) {
                return Err(Error::Schema(format!("line {line}: empty or duplicate patient_id `{}`", f[0])));
            }
            let gender: u8 = field(f[1], line, "gender")?;
            let race: u8 = field(f[3], line, "race")?;
            if gender > 1 || race > 9 {
                return Err(Error::Schema(format!("line {line}: gender must be 0/1 and race 0..9")));
            }
            Ok(PatientRecord {
                patient_id: f[0].to_string(),
                gender,
                birth_year: field(f[2], line, "birth_year")?,
                race,
                label: f[4]
                    .parse()
                    .map_err(|_| Error::Schema(format!("line {line}: invalid label `{}`", f[4])))?,
                index_date: date(f[5], line, "index_date")?,
            })
        })
        .collect()
}

pub fn read_events(text: &str) -> Result<Vec<CodedEvent>> {
    table_rows(text, EVENTS_SCHEMA, &EVENT_COLUMNS)?
        .into_iter()
        .map(|(line, f)| {
            if f[0].is_empty() || f[2].is_empty() {
                return Err(Error::Schema(format!("line {line}: empty patient_id or code")));
            }
            Ok(CodedEvent {
                patient_id: f[0].to_string(),
                date: date(f[1], line, "date")?,
                code: f[2].to_string(),
                code_type: f[3]
                    .parse()
                    .map_err(|_| Error::Schema(format!("line {line}: invalid code_type `{}`", f[3])))?,
            })
        })
        .collect()
}
