use thiserror::Error;

/// Errors raised by probe construction, integration, bound checks and flows.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe is not admissible here: {0}")]
    Inadmissible(String),

    #[error("mode mismatch: expected {expected}, got {got}")]
    ModeMismatch { expected: &'static str, got: &'static str },

    #[error("integral of {0} diverges")]
    Divergent(String),

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error("density floor breached: {0}")]
    DensityFloor(String),

    #[error("not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
