//! Synthetic cohort generation, case/control selection and splitting.

mod generate;
mod select;
mod split;
mod types;

pub use generate::{
    background_codes, generate_synthetic_cohort, risk_code_type, CodeRate, SyntheticSignalSpec, RISK_CODES,
    VISIT_CODE,
};
pub use select::{build_cohort, select_cases, select_controls, IndexDates, SelectionSummary};
pub use split::{split_cohort, Split, SplitAssignment};
pub use types::{CodeType, CodedEvent, CohortConfig, Label, PatientRecord, SplitFractions};
