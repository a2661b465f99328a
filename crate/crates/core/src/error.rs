use std::path::PathBuf;

use thiserror::Error;

use crate::month::CalendarMonth;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed month {value:?} at row {row}: expected YYYY-MM")]
    MalformedMonth { row: usize, value: String },

    #[error("duplicate month {month} at row {row}")]
    DuplicateMonth { row: usize, month: CalendarMonth },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: {message}")]
    BadFile { path: PathBuf, message: String },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("series {name:?} has zero variance over its fit window")]
    DegenerateCovariate { name: String },

    #[error("{column:?} is missing at {month}, which lies inside the likelihood window")]
    MissingInWindow { column: String, month: CalendarMonth },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for a field of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("latent field of length {0} is too short (need at least 5)")]
    FieldTooShort(usize),

    #[error("chain {chain} produced a non-finite state at iteration {iteration}")]
    NonFinite { chain: usize, iteration: usize },

    #[error("conditional precision matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("year {0} is not covered by the data")]
    YearAbsent(i32),

    #[error("fold for {year} is too small: {reason}")]
    FoldTooSmall { year: i32, reason: String },

    #[error("draws are incompatible with the model input: {0}")]
    IncompatibleDraws(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs (data, configuration, windows)
    /// rather than by the numerics or the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite { .. } | Error::NotPositiveDefinite | Error::Io(_)
        )
    }
}
