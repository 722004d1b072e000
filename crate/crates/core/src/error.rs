use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver did not converge (final gradient norm {grad_norm:e})")]
    NotConverged { grad_norm: f64 },

    #[error("{theorem}: hypotheses not met: {reason}")]
    HypothesisMismatch { theorem: String, reason: String },

    #[error("all grid-search pilots failed: {0}")]
    AllPilotsFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
