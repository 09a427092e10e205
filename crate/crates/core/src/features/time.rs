use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAYS_PER_MONTH: f64 = 30.4375;
/// Months immediately before the index date that never feed a model.
pub const BUFFER_MONTHS: i64 = 3;
/// Months before index covered by the four slices together.
pub const SPAN_MONTHS: i64 = 27;

/// Whole months elapsed for a day offset before the index date.
pub fn month_offset(days_before: i64) -> i64 {
    (days_before as f64 / DAYS_PER_MONTH).floor() as i64
}

/// Smallest non-negative day offset whose month offset is `months`.
pub fn first_day_of_month(months: i64) -> i64 {
    (months as f64 * DAYS_PER_MONTH).ceil() as i64
}

/// Six-month slice before the index date.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeSlice {
    M24,
    M18,
    M12,
    M6,
}

impl TimeSlice {
    /// Oldest first.
    pub const ALL: [TimeSlice; 4] = [TimeSlice::M24, TimeSlice::M18, TimeSlice::M12, TimeSlice::M6];

    /// Half-open month range `[lo, hi)` before the index date.
    pub fn months(self) -> (i64, i64) {
        match self {
            TimeSlice::M6 => (3, 9),
            TimeSlice::M12 => (9, 15),
            TimeSlice::M18 => (15, 21),
            TimeSlice::M24 => (21, 27),
        }
    }

    /// Half-open day-offset range before the index date.
    pub fn days(self) -> (i64, i64) {
        let (lo, hi) = self.months();
        (first_day_of_month(lo), first_day_of_month(hi))
    }

    pub fn for_month(offset: i64) -> Option<TimeSlice> {
        TimeSlice::ALL.into_iter().find(|s| {
            let (lo, hi) = s.months();
            (lo..hi).contains(&offset)
        })
    }

    /// Position in oldest-first order.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            TimeSlice::M6 => "M6",
            TimeSlice::M12 => "M12",
            TimeSlice::M18 => "M18",
            TimeSlice::M24 => "M24",
        }
    }

    /// Nominal months-before-index used on the command line (`24`, `18`, ...).
    pub fn nominal(self) -> u32 {
        match self {
            TimeSlice::M6 => 6,
            TimeSlice::M12 => 12,
            TimeSlice::M18 => 18,
            TimeSlice::M24 => 24,
        }
    }
}

impl fmt::Display for TimeSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Contiguous slice list starting at M24, oldest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationWindow {
    len: usize,
}

impl ObservationWindow {
    pub fn new(len: usize) -> Result<Self> {
        if !(1..=4).contains(&len) {
            return Err(Error::Config(format!("window length {len} outside 1..=4")));
        }
        Ok(Self { len })
    }

    pub fn all() -> [ObservationWindow; 4] {
        [1, 2, 3, 4].map(|len| ObservationWindow { len })
    }

    pub fn slices(&self) -> &'static [TimeSlice] {
        &TimeSlice::ALL[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Months between the end of the window and the index date, buffer included.
    pub fn horizon_months(&self) -> i64 {
        SPAN_MONTHS - 6 * self.len as i64
    }

    /// Months with the buffer excluded.
    pub fn horizon_months_excluding_buffer(&self) -> i64 {
        self.horizon_months() - BUFFER_MONTHS
    }

    /// Day range before index covered by the window.
    pub fn days(&self) -> (i64, i64) {
        let newest = self.slices()[self.len - 1].days().0;
        (newest, TimeSlice::M24.days().1)
    }

    /// `24,18`-style tag.
    pub fn tag(&self) -> String {
        self.slices()
            .iter()
            .map(|s| s.nominal().to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for ObservationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.slices().iter().map(|s| s.label()).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for ObservationWindow {
    type Err = Error;

    /// Accepts `24`, `24,18`, `24,18,12`, `24,18,12,6` (the `M` prefix is optional).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        let w = ObservationWindow::new(parts.len())?;
        for (p, slice) in parts.iter().zip(w.slices()) {
            let n = p.trim_start_matches(['M', 'm']);
            if n != slice.nominal().to_string() {
                return Err(Error::Config(format!(
                    "window `{s}` must be a contiguous prefix of 24,18,12,6"
                )));
            }
        }
        Ok(w)
    }
}
