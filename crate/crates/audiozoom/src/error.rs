use std::path::PathBuf;

use thiserror::Error;

/// Failure of a command, split by who has to fix it.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] audiozoom_core::Error),

    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: hound::Error },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Data(String),
}

impl CliError {
    /// 1 for usage errors, 2 for everything caused by the data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
