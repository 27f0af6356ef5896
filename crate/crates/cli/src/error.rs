use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

/// Failures of a pipeline command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: not a valid {what} file: {reason}", path.display())]
    Format {
        path: PathBuf,
        what: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Pipeline(#[from] channel_charting::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for dimension mismatches, 4 for
    /// unreadable or unwritable files, 1 for anything the pipeline rejects.
    pub fn exit_code(&self) -> i32 {
        use channel_charting::Error as E;
        match self {
            CliError::Config(_) | CliError::Pipeline(E::InvalidConfig(_)) => 2,
            CliError::Dimension(_) | CliError::Pipeline(E::DimensionMismatch(_)) => 3,
            CliError::Io { .. } | CliError::Format { .. } => 4,
            CliError::Pipeline(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "dimension",
            4 => "io",
            _ => "pipeline",
        }
    }

    /// Single-line JSON description for stderr.
    pub fn json_line(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
