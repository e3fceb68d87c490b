use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("invalid slowly varying factor: {0}")]
    InvalidSlowlyVarying(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The abscissa grid is too coarse to bracket the first-choice threshold.
    #[error("grid of {grid_size} points cannot resolve the threshold at stage {stage}")]
    Resolution { stage: usize, grid_size: usize },

    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    #[error("no convergence by n = {max_n}; last values {window:?}")]
    NoConvergence { max_n: usize, window: Vec<(usize, f64)> },

    #[error("sandwich ordering violated at n = {n} (j = {j}): lower {lower}, value {value}, upper {upper}")]
    OrderingViolation {
        n: usize,
        j: usize,
        lower: f64,
        value: f64,
        upper: f64,
    },

    #[error("policy table covers horizon {table}, requested {requested}")]
    HorizonMismatch { table: usize, requested: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
