use std::path::Path;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{location}: cannot parse `{field}`: {message}")]
    Parse {
        location: String,
        field: String,
        message: String,
    },
    #[error("{location}: unknown key `{key}`")]
    UnknownKey { location: String, key: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Solver(#[from] sl_maslov_core::Error),
    /// The computation finished but an invariant it checks did not hold.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn invalid(field: &str, message: &str) -> Self {
        CliError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::UnknownKey { .. } => "unknown_key",
            CliError::Invalid { .. } => "invalid",
            CliError::Io { .. } => "io",
            CliError::Solver(_) => "solver",
            CliError::Check(_) => "check",
        }
    }

    pub fn record(&self, config_hash: Option<&str>) -> ErrorRecord {
        ErrorRecord {
            schema: ERROR_SCHEMA,
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            config_hash: config_hash.map(str::to_string),
        }
    }
}

pub const ERROR_SCHEMA: &str = "sl-maslov/error/v1";

/// Machine-readable error written to `error.json` and stderr.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub schema: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
    pub config_hash: Option<String>,
}
