//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize a vector with norm below 1e-12")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("vector contains a non-finite value")]
    NonFinite,

    #[error("index is empty")]
    EmptyIndex,

    #[error("scaler has seen no samples")]
    NotFitted,

    #[error("memory holds {count} entries but recalibration requires more than {required}")]
    InsufficientMemory { count: usize, required: usize },

    #[error("outcome log is empty")]
    EmptyLog,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("retention window {window} exceeds test set size {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("delay {delay} is out of range for stream length {len}")]
    DelayTooLarge { delay: usize, len: usize },

    #[error("bad magic bytes: expected {expected}")]
    BadMagic { expected: &'static str },

    #[error("truncated or size-inconsistent file: {0}")]
    TruncatedFile(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u32, classes: u32 },

    #[error("record {record} holds a non-finite feature value")]
    NonFiniteFeature { record: u64 },

    #[error("input record list is empty")]
    EmptyInput,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
