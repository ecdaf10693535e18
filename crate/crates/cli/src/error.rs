use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration text, unknown keys or wrongly typed values.
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// A well-formed configuration that violates a constraint.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    /// The models rejected the resolved configuration.
    #[error("invalid configuration: {0}")]
    Model(preset_core::Error),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Model(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<preset_core::Error> for CliError {
    fn from(e: preset_core::Error) -> Self {
        if e.is_engine_failure() {
            CliError::Integration(e.to_string())
        } else {
            CliError::Model(e)
        }
    }
}
