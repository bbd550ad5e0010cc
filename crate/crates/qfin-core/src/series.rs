use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A price path in the coordinates the theory lives in: `t` in years since
/// the series start and `x = ln(price)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSeries {
    t: Vec<f64>,
    x: Vec<f64>,
}

impl CoordinateSeries {
    /// `t` must start at 0, increase strictly and pair with finite `x`.
    pub fn new(t: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if t.len() != x.len() {
            return Err(Error::Parameter(format!(
                "t and x lengths differ: {} vs {}",
                t.len(),
                x.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "coordinate series needs at least 2 samples, got {}",
                t.len()
            )));
        }
        if t[0] != 0.0 {
            return Err(Error::Parameter(format!("t must start at 0, got {}", t[0])));
        }
        for w in t.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Parameter(format!(
                    "t must be strictly increasing (violated near t = {})",
                    w[0]
                )));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x contains a non-finite entry".into()));
        }
        Ok(Self { t, x })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Median spacing of the time grid, in years.
    pub fn median_dt(&self) -> f64 {
        let mut dts: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = dts.len();
        if n % 2 == 1 {
            dts[n / 2]
        } else {
            0.5 * (dts[n / 2 - 1] + dts[n / 2])
        }
    }

    /// Largest relative deviation of a spacing from the median spacing.
    pub fn sampling_irregularity(&self) -> f64 {
        let med = self.median_dt();
        self.t
            .windows(2)
            .map(|w| libm::fabs((w[1] - w[0]) - med) / med)
            .fold(0.0, f64::max)
    }
}
