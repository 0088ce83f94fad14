use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency must be non-negative, got {0}")]
    NegativeFrequency(f64),

    #[error("noise kernel is not integrable for s = {s} (spectral weight behaves as omega^(s-1) near zero)")]
    NonIntegrableKernel { s: f64 },

    #[error("integral of J(omega)/omega diverges for s = {s}")]
    DivergentShift { s: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("solution not converged under grid refinement: relative change {change:.3e} exceeds {tolerance:.1e}")]
    Accuracy { change: f64, tolerance: f64 },

    #[error("time index {index} is masked (|F| below threshold at t = {t})")]
    Singular { index: usize, t: f64 },

    #[error("asymptotic state not converged: drift {drift:.3e} exceeds {threshold:.1e}")]
    NotConverged { drift: f64, threshold: f64 },

    #[error("uncertainty bound violated at t = {t}: det = {det:.12} < 1/4")]
    UncertaintyViolation { t: f64, det: f64 },

    #[error("time {t} beyond the recurrence-safe window {t_rec:.3} of the discretized bath")]
    BeyondRecurrence { t: f64, t_rec: f64 },

    #[error("bath discretization too coarse: bin error {achieved:.3e} exceeds {requested:.1e}")]
    CoarseBath { achieved: f64, requested: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
