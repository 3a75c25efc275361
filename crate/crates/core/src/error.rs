use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed archive contents; `offset` is the byte position where parsing failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("dimension mismatch: expected {expected:?} (samples, features), got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("concept `{0}` has no annotated location")]
    EmptyConcept(String),

    #[error("unknown concept id {0}")]
    UnknownConcept(usize),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("search space of {size} labels exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    #[error("remaining budget {requested} exceeds the stored Top depth {available}")]
    BudgetTooDeep { requested: usize, available: usize },

    #[error("granularity mismatch between label bounds and requested estimate")]
    GranularityMismatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
