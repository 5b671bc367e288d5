use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid measurement operator: {0}")]
    InvalidMeasurement(String),

    #[error("invalid gate set: {0}")]
    InvalidGateSet(String),

    #[error("gate index {index} out of range for a set of {len} gates")]
    GateIndexOutOfRange { index: usize, len: usize },

    #[error("no inverse for the sequence exists in the gate set")]
    NoInverse,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expectation value has imaginary part {0:e}")]
    ComplexExpectation(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge")]
    NotConverged,

    #[error("dataset I/O: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
