use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("resolution mismatch: q={left} vs q={right} (refine to a common resolution first)")]
    ResolutionMismatch { left: u64, right: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty set where a nonempty one is required")]
    EmptySet,

    #[error("set has zero measure")]
    ZeroMeasure,

    #[error("volumes differ: {left} vs {right}")]
    UnequalVolumes { left: String, right: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("convolution workspace of {needed} elements exceeds cap {cap}")]
    WorkspaceOverflow { needed: u128, cap: usize },

    #[error("floating-point convolution could not be rounded exactly")]
    PrecisionLoss,

    #[error("integer coordinate overflow")]
    CoordinateOverflow,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
