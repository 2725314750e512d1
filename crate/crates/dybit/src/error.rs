//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A format specification is malformed (width out of range, etc.).
    #[error("invalid format spec: {0}")]
    InvalidSpec(String),

    /// A code word does not fit the format it was paired with.
    #[error("invalid code: {0}")]
    InvalidCode(String),

    /// Decoded field values are inconsistent with the format widths.
    #[error("inconsistent fields: {0}")]
    InvalidFields(String),

    /// A numeric argument is out of domain (non-finite, non-positive scale, ...).
    #[error("invalid value: {0}")]
    InvalidValue(String),

    /// The datapath was asked to operate at an unsupported bit-width.
    #[error("unsupported precision mode: {0}")]
    UnsupportedMode(String),

    /// A datapath operand exceeds the width of its mode.
    #[error("operand out of range: {0}")]
    OperandRange(String),

    /// No tiling of a layer fits the configured buffers.
    #[error("buffer capacity exceeded for layer '{layer}': {detail}")]
    Capacity { layer: String, detail: String },

    /// The requested constraint cannot be satisfied even at full degradation.
    #[error("infeasible constraint: best achievable ratio {best_ratio}")]
    Infeasible { best_ratio: f64 },

    /// A caller-supplied input violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A descriptor, manifest, or config file does not match its schema.
    #[error("schema error in {path}: {detail}")]
    Schema { path: String, detail: String },

    /// A descriptor references a blob id that the manifest does not define.
    #[error("dangling tensor reference '{id}' in {context}")]
    DanglingReference { id: String, context: String },

    /// Declared tensor dimensions disagree with each other.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A blob file is not the size its manifest entry declares.
    #[error("size mismatch for blob '{id}': expected {expected} bytes, found {found}")]
    SizeMismatch { id: String, expected: u64, found: u64 },

    /// A tensor payload contains NaN or infinity.
    #[error("non-finite element: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
