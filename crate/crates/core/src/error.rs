use std::path::PathBuf;

/// Errors raised while building grids, assembling operators, or stepping.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("no convergence after {iterations} iterations (last change {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("operator has no directional split (one-dimensional problem)")]
    NoSplit,

    #[error("method {0} does not produce a Lagrange multiplier")]
    NoMultiplier(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
