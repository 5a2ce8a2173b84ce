use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("unknown sensor config `{id}` (valid ids: {valid})")]
    UnknownConfig { id: String, valid: String },

    #[error("unknown partition `{name}` (valid: {valid})")]
    UnknownPartition { name: String, valid: &'static str },

    #[error("per-config metrics are missing config `{0}`")]
    MissingConfig(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported {format} version {found}")]
    UnsupportedVersion { format: &'static str, found: u16 },

    #[error("truncated input at byte offset {offset}")]
    Truncated { offset: u64 },

    #[error("event stream order violation at record {index}")]
    OrderViolation { index: u64 },

    #[error("timestamps not strictly increasing at frame {index}")]
    NonMonotonicTimestamps { index: usize },

    #[error("coordinate ({x}, {y}) out of bounds for {width}x{height}")]
    CoordOutOfBounds {
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },

    #[error("duplicate sequence id `{0}`")]
    DuplicateSequence(String),

    #[error("path referenced by manifest does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
