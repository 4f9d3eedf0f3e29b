use serde_json::{json, Value};
use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: key `{key}`: {message}")]
    Parse { path: String, line: usize, column: usize, key: String, message: String },
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] barylab::Error),
    #[error("bound violated: {}", .0.join("; "))]
    BoundViolated(Vec<String>),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }

    /// 2 for a violated theorem hypothesis, 3 for a violated bound, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(barylab::Error::HypothesisViolated(_) | barylab::Error::AnchorNotBarycenter { .. }) => 2,
            CliError::BoundViolated(_) => 3,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Validation(_) => "validation_error",
            CliError::Io { .. } => "io_error",
            CliError::Core(barylab::Error::HypothesisViolated(_) | barylab::Error::AnchorNotBarycenter { .. }) => {
                "hypothesis_violated"
            }
            CliError::Core(_) => "run_error",
            CliError::BoundViolated(_) => "bound_violated",
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() });
        match self {
            CliError::Parse { path, line, column, key, .. } => {
                v["path"] = json!(path);
                v["line"] = json!(line);
                v["column"] = json!(column);
                v["key"] = json!(key);
            }
            CliError::Validation(items) | CliError::BoundViolated(items) => v["violations"] = json!(items),
            _ => {}
        }
        v
    }
}
