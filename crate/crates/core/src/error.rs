use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent configuration: horizon overruns, mismatched inputs.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    /// A function was evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration error: {0}")]
    Integration(String),

    /// The process has no further moves (complete graph, no alive edges).
    #[error("process exhausted: {0}")]
    Exhausted(String),

    #[error("graph generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
