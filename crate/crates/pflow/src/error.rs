use std::io;
use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    /// Malformed JSON or a schema violation; `path` points at the offending field.
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pflow_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "io_read",
            CliError::Write { .. } => "io_write",
            CliError::Config { .. } => "config",
            CliError::Env { .. } => "environment",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
            CliError::Csv(_) => "csv",
        }
    }

    /// 2 for an inadmissible configuration, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(pflow_core::Error::Inadmissible { .. }) => 2,
            _ => 1,
        }
    }

    /// Single-line JSON record for the diagnostic stream.
    pub fn to_json_line(&self) -> String {
        let mut record = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Config { path, .. } = self {
            record["path"] = json!(path);
        }
        record.to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
