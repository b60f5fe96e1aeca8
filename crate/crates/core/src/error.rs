use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PnesError {
    #[error("invalid cutoffs: {0}")]
    InvalidCutoffs(String),
    #[error("tensor dimension overflows usize")]
    DimensionOverflow,
    #[error("dimension {dim} exceeds the configured limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },
    #[error("mode {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("a two-mode gate needs distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("incompatible states: {0}")]
    Incompatible(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("heralded mode {0} listed more than once")]
    HeraldOverlap(usize),
    #[error("herald outcome has zero probability")]
    ZeroProbability,
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("coefficient count {count} does not fit cutoff {cutoff}")]
    CutoffTooSmall { count: usize, cutoff: usize },
    #[error("state has off-diagonal support {0:e}")]
    OffDiagonal(f64),
    #[error("truncation loss {loss:e} exceeds {limit:e}")]
    TruncationLoss { loss: f64, limit: f64 },
    #[error("fit did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },
}

pub type Result<T> = std::result::Result<T, PnesError>;
