use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("not a metric: {reason} (at {triple:?})")]
    NotAMetric { reason: String, triple: Vec<String> },

    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceLimit { what: String, limit: u64 },

    #[error("simplex iteration limit of {0} exceeded")]
    IterationLimit(u64),

    #[error("parse error: {0}")]
    Parse(String),

    /// An internal consistency check failed; the inputs were valid.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}
