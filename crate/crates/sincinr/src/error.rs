use thiserror::Error;

use crate::dynamics::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported basis kind: {0}")]
    UnsupportedKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature too coarse: grid step {step} exceeds {limit}")]
    QuadratureTooCoarse { step: f64, limit: f64 },
    #[error("grids differ")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad network shape: {0}")]
    BadShape(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty shift range")]
    EmptyRange,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated data: expected {expected} bytes, got {got}")]
    TruncatedData { expected: usize, got: usize },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64, partial: Box<Trajectory> },
    #[error("series too short: need {need}, have {have}")]
    SeriesTooShort { need: usize, have: usize },
    #[error("SVD did not converge")]
    ConvergenceFailure,
    #[error("time grid is not uniform")]
    NonUniformGrid,
    #[error("series length {0} is too short")]
    LengthTooShort(usize),
    #[error("library is rank deficient on the active set of column {column}")]
    RankDeficientLibrary { column: usize },
    #[error("no periodic structure found: {0}")]
    NoPeriod(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
