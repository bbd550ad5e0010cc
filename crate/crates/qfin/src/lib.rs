//! IO, file formats, and command-line front end for the numerical core.

pub mod error;
pub mod market_data;
pub mod reports;

pub use error::{Error, Result};
