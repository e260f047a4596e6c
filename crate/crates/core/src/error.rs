use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operands must both be kets or both be operators")]
    KindMismatch,

    #[error("k out of range: k = {k}, allowed {min}..={max}")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("zero vector has no Schmidt decomposition")]
    ZeroVector,

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("factor {factor} is not square (rows {rows}, cols {cols})")]
    NonSquareFactor { factor: usize, rows: usize, cols: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invertibility unknown: condition number {condition:e} exceeds bound {bound:e}")]
    InvertibilityUnknown { condition: f64, bound: f64 },

    #[error("map is not completely positive: most negative Choi eigenvalue {defect:e}")]
    NotCompletelyPositive { defect: f64 },

    #[error("a + b vanishes; separable-sum lemma does not apply")]
    SumVanishes,

    #[error("ambiguous subsystem: {0}")]
    AmbiguousSubsystem(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error in field `{field}`: {message}")]
    Format { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(field: &str, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
