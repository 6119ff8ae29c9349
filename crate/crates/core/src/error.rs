use thiserror::Error;

/// Errors surfaced by the role engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Scenario or suite file could not be parsed.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    /// No finite assignment covers every role.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Levenberg-Marquardt produced a non-finite error.
    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
