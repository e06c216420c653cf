//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by any fallible operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// File does not start with the expected magic bytes.
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    /// A stored dimension exceeds the per-side limit (2^16).
    #[error("dimension overflow: {dim} exceeds 65536")]
    DimensionOverflow { dim: u64 },

    /// Payload shorter than the header promised.
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },

    /// Well-formed file in a format this crate does not handle.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// Data contains NaN or infinite values.
    #[error("non-finite data: {count} value(s)")]
    NonFiniteData { count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// Gate flags differ; only 0/0 (cascade) and 1/1 (multi-scale) are valid.
    #[error("gate mismatch: g1 and g2 must be equal")]
    GateMismatch,

    /// A previous-scale state grid was supplied where the model forbids one,
    /// or omitted where it is required.
    #[error("previous-scale input {0}")]
    PrevScaleMismatch(&'static str),

    /// Lattice construction limit.
    #[error("feature dimension {dim} unsupported (max {max})")]
    FeatureDimTooLarge { dim: usize, max: usize },

    /// Exact-solve oracle budget exceeded.
    #[error("instance too large for dense solve: {size} > {budget}")]
    InstanceTooLarge { size: usize, budget: usize },

    /// The assembled system was not positive definite; with beta >= 0 this
    /// signals a kernel bug upstream.
    #[error("system not positive definite")]
    NotPositiveDefinite,

    /// Metrics were requested on non-positive depth values.
    #[error("non-positive values at {count} unmasked pixel(s)")]
    NonPositiveValues { count: usize },

    #[error("training diverged (loss not finite) at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("malformed model file: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
