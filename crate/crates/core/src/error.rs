use thiserror::Error;

/// Errors raised by the estimation and privacy toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition on its value.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The request is well-formed but cannot be served in the current
    /// knowledge or simulation state.
    #[error("precondition: {0}")]
    State(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn state<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::State(msg.into()))
}
