use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::concept::group_code;
use super::time::{month_offset, TimeSlice};
use crate::cohort::{CodeType, CodedEvent};
use crate::error::{Error, Result};

/// `(code type, grouped code)`.
pub type ConceptKey = (CodeType, String);

/// One patient's grouped-code counts per slice, oldest slice first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub counts: BTreeMap<ConceptKey, [u32; 4]>,
    /// Distinct event days per slice.
    pub encounter_days: [u32; 4],
    /// Events in the buffer or beyond the oldest slice.
    pub dropped: usize,
}

impl SliceCounts {
    pub fn total(&self) -> usize {
        self.counts
            .values()
            .map(|c| c.iter().map(|&x| x as usize).sum::<usize>())
            .sum()
    }
}

/// Buckets one patient's events into the four slices by month offset before
/// `index`. Buffer-month and out-of-span events are counted as dropped.
pub fn slice_events<'a, I>(events: I, index: NaiveDate) -> Result<SliceCounts>
where
    I: IntoIterator<Item = &'a CodedEvent>,
{
    let mut out = SliceCounts::default();
    let mut days: [BTreeSet<NaiveDate>; 4] = Default::default();
    for e in events {
        let before = (index - e.date).num_days();
        if before < 0 {
            return Err(Error::DataIntegrity(format!(
                "event {} {} for {} is after index date {index}",
                e.date, e.code, e.patient_id
            )));
        }
        match TimeSlice::for_month(month_offset(before)) {
            Some(s) => {
                let key = (e.code_type, group_code(&e.code, e.code_type).to_string());
                out.counts.entry(key).or_insert([0; 4])[s.ordinal()] += 1;
                days[s.ordinal()].insert(e.date);
            }
            None => out.dropped += 1,
        }
    }
    for (d, set) in out.encounter_days.iter_mut().zip(&days) {
        *d = set.len() as u32;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn ev(days_before: i64, code: &str) -> CodedEvent {
        let index = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
        CodedEvent {
            patient_id: "p".into(),
            date: index - Duration::days(days_before),
            code: code.into(),
            code_type: CodeType::Dx,
        }
    }

    fn index() -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, 1, 1).unwrap()
    }

    #[test]
    fn slice_examples() {
        let s = slice_events(&[ev(304, "401.1")], index()).unwrap();
        assert_eq!(s.counts[&(CodeType::Dx, "401".into())], [0, 0, 1, 0]);
        let s = slice_events(&[ev(61, "401")], index()).unwrap();
        assert!(s.counts.is_empty());
        assert_eq!(s.dropped, 1);
        let s = slice_events(&[ev(28 * 31, "401")], index()).unwrap();
        assert_eq!(s.dropped, 1);
    }

    #[test]
    fn after_index_is_an_error() {
        assert!(matches!(
            slice_events(&[ev(-1, "401")], index()),
            Err(Error::DataIntegrity(_))
        ));
    }

    #[test]
    fn encounter_days_are_distinct() {
        let evs = [ev(100, "401"), ev(100, "250"), ev(120, "401")];
        let s = slice_events(&evs, index()).unwrap();
        assert_eq!(s.encounter_days, [0, 0, 0, 2]);
        assert_eq!(s.total(), 3);
    }
}
