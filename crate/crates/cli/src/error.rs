use std::io;
use std::path::PathBuf;

/// Everything that can go wrong outside the numerics.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    /// Coordinates are 1-based.
    #[error("{path}: entry ({row},{col}) = {value} is not a finite nonnegative real")]
    Validation {
        path: PathBuf,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] lifted_nmf::Error),
    #[error("failed to serialize {what}: {source}")]
    Serialize {
        what: &'static str,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
