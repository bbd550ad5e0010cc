//! Binned occupancy density of the log-price coordinate and the amplitude
//! `A = sqrt(P)` feeding the inverse problem.

use alloc::format;
use alloc::vec::Vec;

use crate::{CoordinateSeries, Error, Result};

/// Default number of histogram boxes for the reproduction workflow.
pub const DEFAULT_BINS: usize = 19;
/// Default relative floor applied to empty boxes before the square root.
pub const DEFAULT_FLOOR: f64 = 1e-4;

/// Normalized occupancy histogram on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    /// Bin centers.
    pub x: Vec<f64>,
    /// Bin width.
    pub dx: f64,
    pub counts: Vec<u64>,
    /// Density, normalized so that `sum P dx = 1`.
    pub p: Vec<f64>,
    /// Amplitude `sqrt(P)`, possibly floored (see `floor_eps`).
    pub a: Vec<f64>,
    /// Relative floor applied to P before the square root; 0 when none.
    pub floor_eps: f64,
    /// True when the series carried fewer than 10 samples per bin.
    pub sparse: bool,
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Build a grid directly from density values on uniform centers,
    /// renormalizing so that `sum P dx = 1`. Used for analytic densities
    /// and for densities read back from files.
    pub fn from_density(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::GridMismatch);
        }
        if x.len() < 3 {
            return Err(Error::Parameter("need at least 3 grid points".into()));
        }
        let dx = x[1] - x[0];
        if !(dx > 0.0) {
            return Err(Error::Parameter("grid must be increasing".into()));
        }
        for w in x.windows(2) {
            if libm::fabs(w[1] - w[0] - dx) > 1e-9 {
                return Err(Error::Parameter("grid must be uniform".into()));
            }
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("density values must be finite and >= 0".into()));
        }
        let total: f64 = p.iter().sum::<f64>() * dx;
        if !(total > 0.0) {
            return Err(Error::ZeroRange);
        }
        let p: Vec<f64> = p.iter().map(|v| v / total).collect();
        let a: Vec<f64> = p.iter().map(|v| libm::sqrt(*v)).collect();
        Ok(Self {
            x,
            dx,
            counts: alloc::vec![0; p.len()],
            p,
            a,
            floor_eps: 0.0,
            sparse: false,
        })
    }
}

/// Histogram the x-coordinate of a series into `bins` equal-width boxes
/// over `[lo, hi]` (default: the sample range). Bins are right-open except
/// the last, which is closed.
pub fn build_density(
    series: &CoordinateSeries,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<DensityGrid> {
    if series.len() < bins {
        return Err(Error::InsufficientData(format!(
            "{} samples for {bins} bins",
            series.len()
        )));
    }
    build_density_of(series.x(), bins, range)
}

/// Same as [`build_density`] but on a bare sample slice (used for ensemble
/// cross-sections, which may be sparser than the histogram).
pub fn build_density_of(samples: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<DensityGrid> {
    if bins < 3 {
        return Err(Error::Parameter(format!("need at least 3 bins, got {bins}")));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let (lo, hi) = match range {
        Some((lo, hi)) => {
            if !(hi > lo) {
                return Err(Error::Parameter(format!("range [{lo}, {hi}] is empty")));
            }
            (lo, hi)
        }
        None => {
            let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi <= lo {
                return Err(Error::ZeroRange);
            }
            (lo, hi)
        }
    };
    let dx = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    let mut kept = 0u64;
    for &v in samples {
        if v < lo || v > hi {
            continue;
        }
        let mut idx = ((v - lo) / dx) as usize;
        if idx >= bins {
            idx = bins - 1; // hi itself lands in the closed last bin
        }
        counts[idx] += 1;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::InsufficientData("no samples inside the range".into()));
    }
    let norm = kept as f64 * dx;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / norm).collect();
    let a: Vec<f64> = p.iter().map(|v| libm::sqrt(*v)).collect();
    let x: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    Ok(DensityGrid {
        x,
        dx,
        counts,
        p,
        a,
        floor_eps: 0.0,
        sparse: (samples.len() as f64) < 10.0 * bins as f64,
    })
}

/// Recompute the amplitude with empty boxes floored at `eps * max(P)`
/// before the square root, so the curvature ratio stays finite.
pub fn amplitude(grid: &DensityGrid, eps: f64) -> Result<DensityGrid> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("floor must be >= 0, got {eps}")));
    }
    let pmax = grid.p.iter().cloned().fold(0.0, f64::max);
    let floor = eps * pmax;
    let a: Vec<f64> = grid
        .p
        .iter()
        .map(|&v| libm::sqrt(if v < floor { floor } else { v }))
        .collect();
    let mut out = grid.clone();
    out.a = a;
    out.floor_eps = eps;
    Ok(out)
}
