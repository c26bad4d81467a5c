use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("singular normal equations")]
    Singular,
    #[error("diverged; reduce step_size")]
    Diverged,
    #[error("filtered everything; attack budget or p too large")]
    FilteredEverything,
    #[error("attack budget empty")]
    AttackBudgetEmpty,
    #[error("labels must be -1 or +1 (found {0})")]
    InvalidLabels(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("test data required for oracle_test selection")]
    MissingTestData,
    #[error("config error for key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
