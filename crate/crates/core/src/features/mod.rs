//! Event slicing, concept vocabulary, demographic encoding and the
//! per-slice count tensors consumed by every model.
//!
//! Slices are six months wide and sit between 3 and 27 months before the
//! index date. Tensors always order slices oldest first.

pub mod concept;
mod prepare;
mod slicing;
mod tensor;
pub mod time;
mod vocab;

pub use concept::group_code;
pub use prepare::{
    density_filter, prepare, prepare_cohort, FeatureConfig, PrepareDiagnostics, PreparedCohort, PreparedData,
};
pub use slicing::{slice_events, ConceptKey, SliceCounts};
pub use tensor::{
    aggregate_slices, binarize, encode_demographics, encode_demographics_raw, flatten_for_tabular, SliceTensor,
    DEMO_WIDTH, RACE_VALUES,
};
pub use time::{month_offset, ObservationWindow, TimeSlice, DAYS_PER_MONTH};
pub use vocab::{build_vocabulary, Concept, ConceptVocabulary};
