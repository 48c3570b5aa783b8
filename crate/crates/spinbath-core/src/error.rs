use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step {dt} is too coarse (must be at most {limit})")]
    UnresolvedStep { dt: f64, limit: f64 },

    #[error("phase-jump std {sigma} rad exceeds 1 rad; reduce the sample step or linewidth")]
    PhaseJumpTooLarge { sigma: f64 },

    #[error("dimension {dimension} with alpha {alpha} diverges (need D < 2 alpha)")]
    Divergent { dimension: u8, alpha: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("mismatched input: {0}")]
    Mismatch(String),

    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange { name: &'static str, value: f64, reason: &'static str },

    #[error("asymptotic formula invalid for tau_p = {tau_p}, tau_c = {tau_c}; use quadrature")]
    AsymptoticInvalid { tau_p: f64, tau_c: f64 },

    #[error("tolerance {requested:e} not reached: value {value}, error estimate {achieved:e}")]
    Tolerance { value: f64, achieved: f64, requested: f64 },

    #[error("fit did not converge: {reason}")]
    NoConvergence { reason: String, best: Option<(f64, f64)> },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("unresolved: {0}")]
    Unresolved(String),

    #[error("refusing to extrapolate: {0}")]
    Extrapolation(String),

    #[error("{failed} of {total} resamples failed")]
    ResampleFailures { failed: usize, total: usize },
}

impl Error {
    /// True for failures of a numerical procedure on valid input,
    /// false for rejected input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Tolerance { .. } | Error::NoConvergence { .. } | Error::Unresolved(_) | Error::ResampleFailures { .. }
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            reason: "must be non-negative and finite",
        })
    }
}
