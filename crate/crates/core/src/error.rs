use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, bad configuration or a violated precondition.
    Input,
    /// A computation produced (or was fed) non-finite numbers.
    Numerical,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("input is empty")]
    EmptyFile,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("cannot parse value at row {row}, column `{col}`: {value:?}")]
    UnparsableValue {
        row: usize,
        col: String,
        value: String,
    },
    #[error("duplicate timestamp at row {row}: {timestamp}")]
    DuplicateTimestamp { row: usize, timestamp: String },
    #[error("missing value at row {row}, column `{col}`")]
    MissingValue { row: usize, col: String },
    #[error("csv error: {0}")]
    Csv(String),

    // matrix / feature handling
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown target feature `{0}`")]
    UnknownTarget(String),
    #[error("k = {k} is too large: only {available} candidate features")]
    KTooLarge { k: usize, available: usize },
    #[error("window length {length} exceeds series length {rows}")]
    WindowTooLong { length: usize, rows: usize },
    #[error("constant input: correlation is undefined")]
    ConstantInput,
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    // numerics
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite gradient in `{0}`")]
    NonFiniteGradient(String),
    #[error("training diverged: loss at epoch {epoch} is {loss}")]
    DivergedLoss { epoch: usize, loss: f64 },

    // contrastive
    #[error("need at least 2 windows, got {0}")]
    NotEnoughWindows(usize),
    #[error("no dissimilar pairs available: windows never start {min_gap} or more steps apart")]
    NoNegativesAvailable { min_gap: usize },
    #[error("reference set is empty")]
    EmptyReference,
    #[error("model is incompatible with the request: {0}")]
    IncompatibleModel(String),

    // baselines
    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    // bench
    #[error("anomaly injections overlap or fall outside the series: {0}")]
    OverlappingInjections(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite(_) | Error::NonFiniteGradient(_) | Error::DivergedLoss { .. } => {
                ErrorKind::Numerical
            }
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
