use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty trace")]
    EmptyTrace,

    #[error("histogram has no mass: {0}")]
    EmptyHistogram(&'static str),

    #[error("degenerate scaler: training values are constant or absent")]
    DegenerateScaler,

    #[error("class {class} has {found} traces, need at least {needed}")]
    TooFewTraces {
        class: usize,
        found: usize,
        needed: usize,
    },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("epoch {epoch} out of range for {variants} time-sensitive variants")]
    EpochOutOfRange { epoch: usize, variants: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("probability row {row} sums to {sum}, outside tolerance")]
    RowSum { row: usize, sum: f64 },

    #[error("manifest mismatch: {0}")]
    Manifest(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
