use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::SplitFractions;
use crate::error::{Error, Result};
use crate::numcore::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn suffix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Patient id → split. Every id appears exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub assignment: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, id: &str) -> Option<Split> {
        self.assignment.get(id).copied()
    }

    pub fn members(&self, split: Split) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &s)| s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|&&s| s == split).count()
    }
}

const SPLIT_STREAM: u64 = 0x5350_4C54;

/// Seeded uniform partition. Train and validation sizes are the rounded
/// fractions of `n`; test takes the remainder. Input order does not matter.
pub fn split_cohort<S: AsRef<str>>(ids: &[S], fractions: &SplitFractions, seed: u64) -> Result<SplitAssignment> {
    fractions.validate()?;
    let mut sorted: Vec<&str> = ids.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let n = sorted.len();
    RngStream::new(seed, SPLIT_STREAM).shuffle(&mut sorted);
    let n_train = ((n as f64) * fractions.train).round() as usize;
    let n_val = (((n as f64) * fractions.validation).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let mut assignment = BTreeMap::new();
    for (i, id) in sorted.into_iter().enumerate() {
        let s = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
        assignment.insert(id.to_string(), s);
    }
    Ok(SplitAssignment { assignment })
}
