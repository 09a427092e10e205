use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid label {label} at row {row}")]
    InvalidLabel { row: usize, label: usize },
    #[error("invalid dropout rate {0}")]
    InvalidRate(f64),
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("sequence of length {len} is shorter than filter width {width}")]
    SequenceTooShort { len: usize, width: usize },
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("race index {0} outside 0..10")]
    InvalidRace(u8),
    #[error("config: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind tag, used by the command-line error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::InvalidLabel { .. } => "invalid-label",
            Error::InvalidRate(_) => "invalid-rate",
            Error::NonFiniteGradient(_) => "non-finite-gradient",
            Error::NonFiniteLoss { .. } => "non-finite-loss",
            Error::SequenceTooShort { .. } => "sequence-too-short",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::DataIntegrity(_) => "data-integrity",
            Error::EmptyTrainingSet => "empty-training-set",
            Error::InvalidRace(_) => "invalid-race",
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "schema",
        }
    }
}
