use thiserror::Error;

/// Errors produced by the identification, analysis and surrogate routines.
#[derive(Debug, Error)]
pub enum TvError {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Sampling-rate related violation (Nyquist, decimation factor).
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Two sequences that must line up do not.
    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The requested operation is not defined for this model form.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// The recursive estimator produced a non-finite quantity.
    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: usize, reason: String },

    /// A simulated output exceeded the overflow guard.
    #[error("simulation diverged at t = {t} (|y| = {value:e} exceeds guard {guard:e})")]
    Diverged { t: usize, value: f64, guard: f64 },

    /// An interpolation scheme refused the query (too few knots or extrapolation).
    #[error("interpolation refused: {0}")]
    InterpolationRefused(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for TvError {
    fn from(e: serde_json::Error) -> Self {
        TvError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TvError>;

pub(crate) fn invalid(msg: impl Into<String>) -> TvError {
    TvError::InvalidInput(msg.into())
}
