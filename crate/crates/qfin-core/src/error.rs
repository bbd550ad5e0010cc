use alloc::string::String;
use core::fmt;

/// Errors shared by the numerical modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated a precondition; the message names it.
    Parameter(String),
    /// Not enough samples (or windows, or lags) to run the operation.
    InsufficientData(String),
    /// Series sampling too irregular for horizon statistics.
    NonUniformSampling { max_rel_dev: f64 },
    /// All samples identical; no histogram range exists.
    ZeroRange,
    /// A non-finite value where a finite one is required.
    NonFinite(String),
    /// Grids of two inputs do not match.
    GridMismatch,
    /// An iteration failed to converge.
    Convergence { iterations: usize, residual: f64 },
    /// Fluctuation magnitude outside the small-deviation regime.
    Regime { delta: f64, mean: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::NonUniformSampling { max_rel_dev } => write!(
                f,
                "non-uniform sampling (max relative spacing deviation {max_rel_dev:.3}); \
                 resample to a regular grid first"
            ),
            Error::ZeroRange => write!(f, "all samples identical: histogram range is empty"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::GridMismatch => write!(f, "mismatched grids"),
            Error::Convergence {
                iterations,
                residual,
            } => write!(
                f,
                "iteration did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::Regime { delta, mean } => write!(
                f,
                "diffusion fluctuation |{delta:.3e}| exceeds the mean {mean:.3e}; \
                 the varying-diffusion equation requires |delta D| < <D>"
            ),
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}
