use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("phi order {0} is out of range (0..=4)")]
    PhiOrder(usize),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension {0} exceeds the dense limit")]
    TooLarge(usize),
    #[error("node sequence must be non-empty")]
    EmptyNodes,
    #[error("Leja point count {0} outside 1..=500")]
    LejaCount(usize),
    #[error("spectral magnitude must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("starting vector is zero")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in field {field} at cell ({i}, {j})")]
    NonFinite { field: usize, i: usize, j: usize },
    #[error("unknown case '{0}'")]
    UnknownCase(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical abort at t = {t}: {reason}")]
    Abort { t: f64, reason: String },
    #[error("missing reference file {0}")]
    MissingReference(PathBuf),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
