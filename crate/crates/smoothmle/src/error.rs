//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by model construction, estimation and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmleError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid fixture: {0}")]
    InvalidFixture(String),

    #[error("density is undefined at atom location {0}")]
    AtomDensityUndefined(f64),

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("smoothing radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("offset {eps} exceeds r/2 = {limit}")]
    OffsetTooLarge { eps: f64, limit: f64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("no sign change of the empirical score on [{lo}, {hi}]; fallback estimate {fallback}")]
    NoRootInInterval { lo: f64, hi: f64, fallback: f64 },

    #[error("sample size too small: slack s = {s} must be below 1/2")]
    SampleSizeTooSmall { s: f64 },

    #[error("no feasible smoothing radius; at r = {r_max} failed: {failed:?}")]
    NoFeasibleSmoothing { r_max: f64, failed: Vec<String> },

    #[error("shift must be nonzero")]
    ShiftZero,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SmleError {
    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            SmleError::QuadratureFailure(_)
                | SmleError::NoFeasibleSmoothing { .. }
                | SmleError::NoRootInInterval { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, SmleError>;
