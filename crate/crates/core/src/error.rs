//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape mismatch in a linear-algebra or network operation. Both shapes
    /// are carried so the message can name them.
    #[error("{op}: dimension mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("{0}: input must be non-empty")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Structured cohort-file error: carries the data row number (1-based,
    /// excluding the header) and the offending column when known.
    #[error("cohort parse error{}{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default(), column.as_ref().map(|c| format!(", column '{c}'")).unwrap_or_default())]
    CohortParse {
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("metrics error: {0}")]
    Metrics(String),
}

impl Error {
    pub(crate) fn dims(
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn parse_at(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::CohortParse {
            row: Some(row),
            column: Some(column.into()),
            message: message.into(),
        }
    }

    pub(crate) fn parse(message: impl Into<String>) -> Self {
        Error::CohortParse {
            row: None,
            column: None,
            message: message.into(),
        }
    }
}
