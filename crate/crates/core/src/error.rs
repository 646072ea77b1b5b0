use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value {value} for {what}")]
    NonFinite { what: String, value: f64 },

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("invalid model term in `{model}`: {reason}")]
    InvalidTerm { model: String, reason: String },

    #[error("model `{model}` overflowed: linear predictor {predictor} exceeds the |h| <= 700 guard")]
    Overflow { model: String, predictor: f64 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown problem `{0}` (expected I, II or III)")]
    UnknownProblem(String),

    #[error("objective vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("point {point:?} does not dominate the reference {reference:?}")]
    ReferenceNotDominated { point: Vec<f64>, reference: Vec<f64> },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing rank or crowding metadata on a tournament candidate")]
    MissingMetadata,

    #[error("csv error: {0}")]
    Csv(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serde(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub(crate) fn ensure_finite(what: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: what.to_string(),
            value,
        })
    }
}
