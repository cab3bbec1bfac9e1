//! Error type with the process exit-code mapping: 2 usage, 3 data, 4
//! numerical.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(puzzle_cm_core::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 0 success, 2 usage, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        use puzzle_cm_core::Error as Core;
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 4,
            CliError::Core(core) => match core {
                Core::Numerical(_) | Core::Diverged { .. } => 4,
                Core::InvalidConfig(_) | Core::InvalidArgument(_) => 2,
                _ => 3,
            },
            _ => 3,
        }
    }
}

impl From<puzzle_cm_core::Error> for CliError {
    fn from(e: puzzle_cm_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
