use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no root for z = {z}: target lies outside the range of F(v, .)")]
    NoRoot { z: f64 },

    #[error("root search for z = {z} did not converge after {iterations} iterations")]
    RootNotConverged { z: f64, iterations: usize },

    #[error("exponent overflow while evaluating a bridge functional")]
    Overflow,

    #[error("{discarded} of {total} bridge samples discarded (limit {limit})")]
    TooManyDiscarded {
        discarded: usize,
        total: usize,
        limit: usize,
    },

    #[error("insufficient tail points for the bound fit: {found} (need {needed})")]
    InsufficientTail { found: usize, needed: usize },

    #[error("estimator failure at rebalance {index}: {source}")]
    Rebalance {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by sample quality rather than bad input.
    pub fn is_sample_quality(&self) -> bool {
        matches!(
            self,
            Error::TooManyDiscarded { .. } | Error::InsufficientTail { .. }
        )
    }
}
