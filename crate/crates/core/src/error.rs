use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Row and column are 1-based positions in the file; row 1 is the header.
    #[error("non-positive price at ({row}, {col}): {value}")]
    NonPositive { row: usize, col: usize, value: f64 },

    #[error("missing value at ({row}, {col})")]
    Missing { row: usize, col: usize },

    #[error("unparseable number at ({row}, {col}): {token:?}")]
    Unparseable {
        row: usize,
        col: usize,
        token: String,
    },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dates not strictly increasing at row {row}: {previous:?} then {current:?}")]
    DatesNotIncreasing {
        row: usize,
        previous: String,
        current: String,
    },

    #[error("invalid header: {0}")]
    Header(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("every asset was excluded; universe is empty")]
    EmptyUniverse,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

impl Error {
    /// True for failures caused by the data being fed in rather than by the
    /// caller's parameters.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_) | Error::LengthMismatch { .. }
        )
    }
}
