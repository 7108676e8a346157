use std::path::PathBuf;

/// Everything a command can fail with, mapped onto the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    NonContraction(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => 1,
            CliError::NonContraction(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<foias_core::Error> for CliError {
    fn from(e: foias_core::Error) -> Self {
        match e {
            foias_core::Error::NonContraction { .. } => CliError::NonContraction(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
