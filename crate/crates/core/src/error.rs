use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate histogram: every pixel falls in gray level {level}")]
    DegenerateHistogram { level: u8 },
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("cannot stratify: class `{class}` has {count} samples but {folds} folds were requested")]
    Stratification { class: String, count: usize, folds: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
