use thiserror::Error;

use crate::optimize::OptimizerRun;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a precondition (wrong dimension, out-of-range action, bad budget).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported domain `{domain}`: {reason}")]
    UnsupportedDomain { domain: String, reason: String },

    /// The GP Gram matrix could not be factorized even after jitter escalation.
    /// When raised from inside an optimizer the run so far is attached.
    #[error("ill-conditioned model: {message}")]
    IllConditioned {
        message: String,
        partial: Option<Box<OptimizerRun>>,
    },

    /// Every point of a batch scored non-finite; there is nothing to select from.
    #[error("optimizer aborted: {message}")]
    OptimizerAborted {
        message: String,
        partial: Box<OptimizerRun>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    /// The optimizer trace recorded before the failure, if any.
    pub fn partial_run(&self) -> Option<&OptimizerRun> {
        match self {
            Error::IllConditioned { partial, .. } => partial.as_deref(),
            Error::OptimizerAborted { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
