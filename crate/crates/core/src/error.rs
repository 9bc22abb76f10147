use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch at {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite values in {tensor}")]
    NonFinite { tensor: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("insufficient samples of class {class}: need {needed}, have {available}")]
    InsufficientClass {
        class: usize,
        needed: usize,
        available: usize,
    },

    #[error("idx parse error: {0}")]
    Idx(String),

    #[error("no entropy records")]
    NoRecords,

    #[error("degenerate correlation input: {0}")]
    Degenerate(String),

    #[error("input dimensionality insufficient for any conflict-free depth")]
    NoConflictFreeDepth,
}

pub type Result<T> = core::result::Result<T, Error>;
