use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or a malformed operator.
    #[error("structural error: {0}")]
    Structural(String),

    /// A structural assumption of the model does not hold.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation is not available for the given dissipation or cone.
    #[error("unsupported structure: {0}")]
    Unsupported(String),

    /// An iterative solver did not reach its tolerance.
    #[error("numerical failure: {message} (last residual {residual:e})")]
    Numerical { message: String, residual: f64 },
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, residual: f64) -> Self {
        Error::Numerical { message: message.into(), residual }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
