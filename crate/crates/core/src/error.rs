use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Positive and not NaN. Infinity passes: limit cases like an unbounded
/// accelerator rate are meaningful inputs.
pub(crate) fn ensure_positive(value: f64, what: &'static str) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("input is empty")]
    EmptyInput,

    #[error("non-finite component at index {0}")]
    NonFinite(usize),

    #[error("expected length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("row block of {k} rows does not divide grid side {n}")]
    BlockSize { k: usize, n: usize },

    #[error("access width of {width_bytes} bytes is not a whole number of {sample_bytes}-byte samples")]
    AccessWidth { width_bytes: usize, sample_bytes: usize },

    #[error("grid file {path}: expected exactly {expected} bytes, found {found}")]
    GridFileSize {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("{what} must be positive")]
    NonPositive { what: &'static str },

    #[error("{context}: missing required field `{field}`")]
    MissingField {
        context: String,
        field: &'static str,
    },

    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("line {line}: unknown counter `{name}`")]
    UnknownCounter { line: usize, name: String },

    #[error("kernel `{kernel}`: counter {counter} is not in the supported set")]
    UnknownCounterName { kernel: String, counter: String },

    #[error("kernel `{kernel}`: missing counter {counter}")]
    MissingCounter {
        kernel: String,
        counter: &'static str,
    },

    #[error("kernel `{kernel}`: {child} exceeds its parent {parent}")]
    Containment {
        kernel: String,
        child: String,
        parent: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("format `{format}` is not supported for {report} reports")]
    UnsupportedFormat {
        format: &'static str,
        report: &'static str,
    },

    #[error("{0}")]
    Unsupported(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
