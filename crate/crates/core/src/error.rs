use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix does not commute with the quarter-turn generator (residual {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("drift coefficient alpha must be nonzero")]
    ZeroAlpha,

    #[error("control interval [{lo}, {hi}] must satisfy lo < 0 < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("point ({x}, {y}) lies outside the grid bounds")]
    OutOfBounds { x: f64, y: f64 },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
