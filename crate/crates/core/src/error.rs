use thiserror::Error;

use crate::format::FormatError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PliteError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid state: {0}")]
    State(String),

    /// Bayes update with zero total likelihood under the current support.
    #[error("belief inconsistency: transition {state} --{action}--> {next} has zero likelihood under every hidden value in support")]
    Inconsistent {
        state: String,
        action: String,
        next: String,
    },

    #[error(
        "value iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("search budget exceeded: {nodes} nodes > cap {cap}")]
    Budget { nodes: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Format(#[from] FormatError),
}

pub type Result<T, E = PliteError> = std::result::Result<T, E>;
