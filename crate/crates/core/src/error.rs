use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("disk point at radius {radius} is within {margin:e} of the boundary circle")]
    BoundaryProximity { radius: f64, margin: f64 },

    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("factor count mismatch: expected n = {expected}, got n = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("n must be at least 1")]
    ZeroDimension,

    #[error("{what} exceeds the supported size ({limit})")]
    SizeLimit { what: &'static str, limit: String },

    #[error("invalid sample count {0}; at least 2 samples are required")]
    InvalidSampleCount(u64),

    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("frame vectors are nearly linearly dependent (Gram determinant {0:e})")]
    Degenerate(f64),

    #[error("frame is not orthonormal: max deviation {0:e}")]
    NotOrthonormal(f64),

    #[error("function {0} of the frame has a nonzero constant term")]
    NonZeroMean(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
