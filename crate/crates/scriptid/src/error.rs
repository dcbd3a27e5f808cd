use std::path::PathBuf;

use scriptid_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const UNREADABLE_PAGE: i32 = 3;
    pub const MALFORMED_CSV: i32 = 4;
    pub const CONTRACT_MISMATCH: i32 = 5;
    pub const DEGENERATE_DATASET: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("cannot read page {}: {reason}", path.display())]
    UnreadablePage { path: PathBuf, reason: String },
    #[error("{}: line {line}: {reason}", path.display())]
    MalformedCsv { path: PathBuf, line: u64, reason: String },
    #[error("feature contract mismatch\n  model:     {model}\n  requested: {requested}")]
    ContractMismatch { model: String, requested: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::EmptyDataset(_) => exit::USAGE,
            CliError::UnreadablePage { .. } => exit::UNREADABLE_PAGE,
            CliError::MalformedCsv { .. } => exit::MALFORMED_CSV,
            CliError::ContractMismatch { .. } => exit::CONTRACT_MISMATCH,
            CliError::Io { .. } | CliError::Format(_) => exit::OTHER,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::Stratification { .. } => exit::USAGE,
                CoreError::DegenerateDataset(_) => exit::DEGENERATE_DATASET,
                CoreError::DegenerateHistogram { .. } | CoreError::Data(_) => exit::OTHER,
            },
        }
    }
}
