//! Error type shared across the solver.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmeqError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("market `{market}` has no unemployed searchers; tightness is undefined")]
    EmptyMarket { market: String },

    #[error("no bargaining surplus at state {state}: total surplus is non-positive")]
    NoSurplus { state: String },

    #[error("{loop_name} failed to converge after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    NonConvergence {
        loop_name: String,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("distribution mass leaked by {leak:.3e} in a transition step")]
    MassLeak { leak: f64 },

    #[error("series too short: need at least {need} observations, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("missing artifact `{path}`: {hint}")]
    MissingArtifact { path: String, hint: String },

    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SmeqError>;

impl SmeqError {
    pub fn invalid_param(name: &str, reason: impl Into<String>) -> Self {
        SmeqError::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
