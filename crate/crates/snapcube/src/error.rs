//! Crate-wide error type.
//!
//! The CLI maps variants onto process exit codes: shape/argument errors
//! exit 2, format and I/O errors exit 3, numerical failures exit 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible array extents (tensor modes, matrix products, operator shapes).
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller-supplied value is outside its admissible range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed file content. `offset` is the byte position of the defect.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Non-finite iterates or other numerical breakdown.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for this error class: 2 usage, 3 data, 4 numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_) | Error::Argument(_) => 2,
            Error::Format { .. } | Error::Io(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
