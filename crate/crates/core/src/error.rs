//! Error type shared across the crate.

use crate::integrator::TrajectorySet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("time before origin: t = {0}")]
    TimeBeforeOrigin(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid {field}: {message}")]
    InvalidField { field: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("divergence at t = {time}")]
    Divergence {
        time: f64,
        partial: Box<TrajectorySet>,
    },

    #[error("no convergence after {0} halvings")]
    NoConvergence(u32),

    #[error("amplitude undefined for non-positive peak")]
    AmplitudeUndefined,

    #[error("no boundary bracketed: both endpoints classify as {0}")]
    NoBoundary(String),

    #[error("figure reproduction failed: {0}")]
    FigureMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::NoConvergence(_) | Error::FigureMismatch(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn invalid_field(field: &str, message: impl Into<String>) -> Error {
        Error::InvalidField {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
