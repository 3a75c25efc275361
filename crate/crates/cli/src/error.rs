use std::io;

use concept_align_core::Error as CoreError;
use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const FORMAT: u8 = 3;
    pub const BUDGET: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("cannot serialise report: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::FORMAT,
            CliError::Core(e) => match e {
                CoreError::Io(_)
                | CoreError::Format { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::InvalidDataset(_)
                | CoreError::EmptyConcept(_) => exit::FORMAT,
                CoreError::InvalidConfig(_)
                | CoreError::InvalidLabel(_)
                | CoreError::UnknownConcept(_)
                | CoreError::SearchSpaceTooLarge { .. } => exit::USAGE,
                _ => exit::FAILURE,
            },
            _ => exit::FAILURE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
