//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    #[error("dimension mismatch: {left} vs {right} modes")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("scheme `{scheme}` violates assumption {assumption} at h = {h}: {detail}")]
    AssumptionViolated {
        scheme: String,
        assumption: &'static str,
        h: f64,
        detail: String,
    },

    #[error("noise eigenvalue is zero at mode {mode} (strictly positive spectrum required)")]
    EtaZero { mode: usize },

    #[error("vector outside the range of the covariance square root at mode {mode} (|coefficient| = {magnitude:.3e} exceeds tolerance)")]
    OutsideRange { mode: usize, magnitude: f64 },

    #[error("quadratic form is not positive definite; conjugate is unbounded")]
    NonCoercive,

    #[error("covariance assembly produced eigenvalue {eigenvalue:.3e} below the PSD tolerance")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("exponent {eps} is at or beyond the critical value {critical} (moment is infinite)")]
    EpsOutOfRange { eps: f64, critical: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
