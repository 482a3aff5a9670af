use std::fmt;

use quake_limit::Error;
use serde_json::json;

/// Failure of a command, mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    Parse(String),
    /// Input that parses but violates a model or run requirement (exit 3).
    Validation(String),
    /// A solver failed to converge or produced non-finite values (exit 4).
    Numerical { message: String, residual: Option<f64> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Validation(_) => 3,
            Self::Numerical { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse(_) => "parse",
            Self::Validation(_) => "validation",
            Self::Numerical { .. } => "numerical",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() });
        if let Self::Numerical { residual: Some(r), .. } = self {
            body["residual"] = if r.is_finite() { json!(r) } else { json!(null) };
        }
        json!({ "error": body })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(m) | Self::Validation(m) => f.write_str(m),
            Self::Numerical { message, .. } => f.write_str(message),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical { message, residual } => Self::Numerical { message, residual: Some(residual) },
            other => Self::Validation(other.to_string()),
        }
    }
}

impl<S: quake_limit::Real> From<quake_limit::RunFailure<S>> for CliError {
    fn from(f: quake_limit::RunFailure<S>) -> Self {
        Error::from(f).into()
    }
}
