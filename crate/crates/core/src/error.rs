use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BvmError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("density is not available for {0} distributions; use the sampling path")]
    DensityUnsupported(&'static str),

    #[error("operation requires a scalar distribution, got {0}")]
    NotScalar(&'static str),

    #[error("insufficient samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("value kind mismatch: {0}")]
    KindMismatch(String),

    #[error("bin edges differ between the two binned pdfs")]
    BinMismatch,

    #[error("divergence is infinite: first pdf has mass where the second has none")]
    InfiniteDivergence,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid agreement rule: {0}")]
    InvalidRule(String),

    #[error("weights must sum to 1 (got {0})")]
    WeightNormalization(f64),

    #[error("sweep grids have different axes")]
    AxisMismatch,
}

pub type Result<T> = std::result::Result<T, BvmError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BvmError {
    BvmError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
