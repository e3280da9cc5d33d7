use std::path::PathBuf;

use bvm_core::BvmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: schema error at `{field}`: {message}")]
    Schema {
        path: String,
        field: String,
        message: String,
    },

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("estimation failed: {0}")]
    Estimation(#[from] BvmError),

    #[error("configs disagree on `{0}`; a factor or ratio needs the same data, comparison and agreement rule")]
    RuleMismatch(String),

    #[error("{0} acceptance check(s) failed")]
    Acceptance(usize),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
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

    /// Process exit status: 2 schema, 3 estimation, 4 rule mismatch,
    /// 5 acceptance failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Estimation(_) => 3,
            CliError::RuleMismatch(_) => 4,
            CliError::Acceptance(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
