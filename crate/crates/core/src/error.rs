use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid score at index {index}: {value}")]
    InvalidScore { index: usize, value: f64 },

    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("training diverged: non-finite parameter after update")]
    TrainingDiverged,

    #[error("data integrity: {0}")]
    DataIntegrity(String),

    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),

    #[error("stratification: {0}")]
    Stratification(String),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("config: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Load { line: u64, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
