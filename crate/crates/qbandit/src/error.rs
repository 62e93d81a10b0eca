//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by qbandit operations.
///
/// Contract violations (bad dimensions, out-of-range parameters) are
/// reported as values rather than panics so that the harness can map them to
/// configuration errors.
#[derive(Debug, Error)]
pub enum Error {
    /// An input contained a NaN or infinite entry.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// Two operands had incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        /// Dimension required by the operation.
        expected: usize,
        /// Dimension actually supplied.
        found: usize,
    },

    /// A matrix dimension exceeded the supported range.
    #[error("dimension {0} exceeds the supported maximum of {max}", max = crate::matcore::MAX_DIM)]
    DimensionTooLarge(usize),

    /// A quadratic form that must be nonnegative was negative.
    #[error("matrix is not positive semidefinite (quadratic form {0:e})")]
    PsdViolation(f64),

    /// A positive-definite solve was requested on a (numerically) singular matrix.
    #[error("matrix is singular (smallest eigenvalue {0:e})")]
    Singular(f64),

    /// A precondition on an argument was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A quantum-model probability fell outside `[0, 1]`.
    #[error("model error: {0}")]
    Model(String),

    /// An experiment configuration was invalid or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure while reading or writing experiment artefacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV encoding or decoding failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// TOML decoding failure.
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
