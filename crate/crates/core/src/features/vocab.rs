use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::slicing::{ConceptKey, SliceCounts};
use crate::cohort::CodeType;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub code: String,
    pub code_type: CodeType,
    /// Population variance of per-patient totals on the training split.
    pub variance: f64,
}

/// Retained concepts; column `i` is `concepts[i]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptVocabulary {
    pub concepts: Vec<Concept>,
    pub threshold: f64,
}

impl ConceptVocabulary {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn index(&self) -> HashMap<ConceptKey, usize> {
        self.concepts
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.code_type, c.code.clone()), i))
            .collect()
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c.code == code)
    }

    /// Keeps the given columns in the given order.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            concepts: columns.iter().map(|&i| self.concepts[i].clone()).collect(),
            threshold: self.threshold,
        }
    }
}

/// Population variance of each concept's per-patient four-slice total over
/// `train`; concepts at or above `threshold` are kept, sorted by code.
pub fn build_vocabulary(train: &[&SliceCounts], threshold: f64) -> Result<ConceptVocabulary> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let n = train.len() as f64;
    // Σx and Σx² per concept; absent patients contribute zeros.
    let mut moments: BTreeMap<(&str, CodeType), (f64, f64)> = BTreeMap::new();
    for sc in train {
        for ((ct, code), c) in &sc.counts {
            let total: f64 = c.iter().map(|&x| x as f64).sum();
            let m = moments.entry((code.as_str(), *ct)).or_insert((0.0, 0.0));
            m.0 += total;
            m.1 += total * total;
        }
    }
    let concepts = moments
        .into_iter()
        .filter_map(|((code, code_type), (s, s2))| {
            let mean = s / n;
            let variance = (s2 / n - mean * mean).max(0.0);
            (variance >= threshold).then(|| Concept {
                code: code.to_string(),
                code_type,
                variance,
            })
        })
        .collect();
    Ok(ConceptVocabulary {
        concepts,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(code: &str, per_patient: &[u32]) -> Vec<SliceCounts> {
        per_patient
            .iter()
            .map(|&c| {
                let mut s = SliceCounts::default();
                if c > 0 {
                    s.counts.insert((CodeType::Dx, code.into()), [c, 0, 0, 0]);
                }
                s
            })
            .collect()
    }

    #[test]
    fn variance_filter() {
        let a = counts("A", &[0, 0, 0, 5]);
        let refs: Vec<&SliceCounts> = a.iter().collect();
        let v = build_vocabulary(&refs, 1.0).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v.concepts[0].variance - 4.6875).abs() < 1e-12);

        let b = counts("B", &[2, 2, 2, 2]);
        let refs: Vec<&SliceCounts> = b.iter().collect();
        assert!(build_vocabulary(&refs, 1.0).unwrap().is_empty());
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(build_vocabulary(&[], 1.0), Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn sorted_by_code() {
        let mut s = SliceCounts::default();
        for code in ["Z", "A", "M"] {
            s.counts.insert((CodeType::Dx, code.into()), [3, 0, 0, 0]);
        }
        let e = SliceCounts::default();
        let v = build_vocabulary(&[&s, &e], 0.0).unwrap();
        let codes: Vec<&str> = v.concepts.iter().map(|c| c.code.as_str()).collect();
        assert_eq!(codes, ["A", "M", "Z"]);
    }
}
