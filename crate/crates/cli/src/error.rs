use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: u64, column: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("graph labels not found in the data: {}", .0.join(", "))]
    LabelMismatch(Vec<String>),
    #[error("{0}")]
    Flag(String),
    #[error(transparent)]
    Model(#[from] agfit::Error),
}

impl CliError {
    pub fn parse(path: &std::path::Path, line: u64, column: usize, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), line, column, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => 3,
            CliError::LabelMismatch(_) | CliError::Flag(_) => 4,
            CliError::Model(_) => 2,
        }
    }
}
