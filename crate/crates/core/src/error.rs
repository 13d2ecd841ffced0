use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} size {requested} exceeds the configured cap {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("truncation cap certifies degree {certified} but degree {requested} was requested")]
    CapInsufficient { requested: i64, certified: i64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("continuation failed at z = {z}: residual {residual:e}")]
    ContinuationFailure { z: Complex64, residual: f64 },

    #[error("Stieltjes inversion failed at t = {t}: density {value:e}")]
    InversionFailure { t: f64, value: f64 },
}

impl Error {
    /// Whether the error comes from a numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ContinuationFailure { .. } | Error::InversionFailure { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
