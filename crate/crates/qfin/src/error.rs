//! IO-side errors; numerical errors bubble up from the core crate.

use chrono::NaiveDate;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("no valid rows in input")]
    EmptyInput,
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("empty slice: no rows in {start}..={end}")]
    EmptySlice { start: NaiveDate, end: NaiveDate },
    #[error("{0}")]
    Parameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] qfin_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
