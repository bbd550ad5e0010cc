//! Scaling statistics of the log-price path: dispersion of returns across
//! horizons, Hurst exponent and fractal dimension, diffusion coefficient,
//! and the rolling (time-dependent) diffusion split into mean plus
//! fluctuation.

use alloc::format;
use alloc::vec::Vec;

use crate::{CoordinateSeries, Error, Result};

/// Maximum tolerated relative spacing deviation before horizon statistics
/// are refused.
const MAX_SAMPLING_IRREGULARITY: f64 = 0.5;

/// Log-returns `x(t + k tau1) - x(t)` at a fixed integer lag `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSample {
    /// Lag in sampling steps.
    pub k: usize,
    /// Horizon in years, `k * median dt`.
    pub tau: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

/// Result of the log-log dispersion fit plus the derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub lags: Vec<usize>,
    /// Hurst exponent (fit slope of ln std vs ln tau).
    pub hurst: f64,
    /// Statistical fractal dimension, `1 / H`.
    pub fractal_dimension: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Diffusion coefficient at the smallest lag, 1/years.
    pub diffusion: f64,
    /// Uncertainty product `m D` at unit mass.
    pub epsilon_tau: f64,
    /// Set when the fit is unusable: zero dispersion at some lag or a
    /// fitted H outside (0, 1). The report is still returned.
    pub degenerate: bool,
}

/// Windowed diffusion coefficient `D(t)` with its mean and fluctuation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSeries {
    /// Window-center times, years.
    pub t: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub mean: f64,
    /// `delta D(t) = D(t) - <D>`; averages to zero by construction.
    pub delta: Vec<f64>,
}

fn check_uniform(series: &CoordinateSeries) -> Result<()> {
    let dev = series.sampling_irregularity();
    if dev >= MAX_SAMPLING_IRREGULARITY {
        return Err(Error::NonUniformSampling { max_rel_dev: dev });
    }
    Ok(())
}

/// Log-returns at lag `k` on a uniformly sampled series.
pub fn returns_at_horizon(series: &CoordinateSeries, k: usize) -> Result<ReturnSample> {
    check_uniform(series)?;
    let n = series.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!(
            "lag {k} must lie in [1, {})",
            n
        )));
    }
    let x = series.x();
    let values: Vec<f64> = (0..n - k).map(|i| x[i + k] - x[i]).collect();
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "lag {k} leaves fewer than 2 returns"
        )));
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(ReturnSample {
        k,
        tau: k as f64 * series.median_dt(),
        mean: m,
        std_dev: libm::sqrt(var),
        values,
    })
}

/// Diffusion coefficient `D = <xi^2> / (2 tau)` at lag `k`. Uses the raw
/// second moment, not the variance about the mean.
pub fn estimate_diffusion(series: &CoordinateSeries, k: usize) -> Result<f64> {
    let sample = returns_at_horizon(series, k)?;
    let msq = sample.values.iter().map(|v| v * v).sum::<f64>() / sample.values.len() as f64;
    Ok(msq / (2.0 * sample.tau))
}

/// Hurst exponent by ordinary least squares of `ln std(xi_k)` against
/// `ln tau_k` over the given lags. Also fills the diffusion coefficient at
/// the smallest lag.
pub fn estimate_hurst(series: &CoordinateSeries, lags: &[usize]) -> Result<ScalingReport> {
    let mut lags: Vec<usize> = lags.to_vec();
    lags.sort_unstable();
    lags.dedup();
    if lags.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct lags, got {}",
            lags.len()
        )));
    }
    let mut log_tau = Vec::with_capacity(lags.len());
    let mut log_std = Vec::with_capacity(lags.len());
    let mut degenerate = false;
    for &k in &lags {
        let s = returns_at_horizon(series, k)?;
        // dispersion indistinguishable from rounding noise counts as zero
        if s.std_dev <= 1e-9 * libm::fabs(s.mean) {
            degenerate = true;
        } else {
            log_tau.push(libm::log(s.tau));
            log_std.push(libm::log(s.std_dev));
        }
    }
    let smallest = lags[0];
    let diffusion = estimate_diffusion(series, smallest)?;

    let (slope, intercept, r2) = if log_tau.len() >= 2 {
        least_squares(&log_tau, &log_std)
    } else {
        degenerate = true;
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let hurst = slope;
    if !(hurst > 0.0 && hurst < 1.0) {
        degenerate = true;
    }
    Ok(ScalingReport {
        lags,
        hurst,
        fractal_dimension: 1.0 / hurst,
        slope,
        intercept,
        r_squared: r2,
        diffusion,
        epsilon_tau: diffusion,
        degenerate,
    })
}

/// Per-window diffusion over windows of `window` samples advancing by
/// `step`, split into mean plus zero-mean fluctuation.
pub fn rolling_diffusion(
    series: &CoordinateSeries,
    window: usize,
    step: usize,
) -> Result<DiffusionSeries> {
    if window < 8 {
        return Err(Error::Parameter(format!(
            "window must be at least 8 samples, got {window}"
        )));
    }
    if step == 0 {
        return Err(Error::Parameter("step must be at least 1".into()));
    }
    let n = series.len();
    if n < window {
        return Err(Error::InsufficientData(format!(
            "series of {n} samples shorter than window {window}"
        )));
    }
    let t = series.t();
    let x = series.x();
    let mut centers = Vec::new();
    let mut values = Vec::new();
    let mut start = 0;
    while start + window <= n {
        let wt: Vec<f64> = t[start..start + window]
            .iter()
            .map(|v| v - t[start])
            .collect();
        let wx = x[start..start + window].to_vec();
        let sub = CoordinateSeries::new(wt, wx)?;
        values.push(estimate_diffusion(&sub, 1)?);
        centers.push(0.5 * (t[start] + t[start + window - 1]));
        start += step;
    }
    if values.is_empty() {
        return Err(Error::InsufficientData("no complete window fits the series".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let delta: Vec<f64> = values.iter().map(|v| v - mean).collect();
    Ok(DiffusionSeries {
        t: centers,
        diffusion: values,
        mean,
        delta,
    })
}

/// Uncertainty product `epsilon * tau = m D`, identically `h_eff / 2`.
pub fn uncertainty_product(mass: f64, diffusion: f64) -> f64 {
    mass * diffusion
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_series(x: Vec<f64>) -> CoordinateSeries {
        let t: Vec<f64> = (0..x.len()).map(|i| i as f64 * 0.1).collect();
        CoordinateSeries::new(t, x).unwrap()
    }

    #[test]
    fn linear_series_has_constant_returns() {
        let s = uniform_series(vec![0.0, 1.0, 2.0, 3.0]);
        let r = returns_at_horizon(&s, 1).unwrap();
        assert_eq!(r.values, vec![1.0, 1.0, 1.0]);
        assert_eq!(r.std_dev, 0.0);
    }

    #[test]
    fn periodic_series_cancels_at_lag_two() {
        let s = uniform_series(vec![0.0, 1.0, 0.0, 1.0]);
        let r = returns_at_horizon(&s, 2).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
    }

    #[test]
    fn non_uniform_sampling_is_refused() {
        let s = CoordinateSeries::new(vec![0.0, 0.1, 1.0, 1.1], vec![0.0; 4]).unwrap();
        assert!(matches!(
            returns_at_horizon(&s, 1),
            Err(Error::NonUniformSampling { .. })
        ));
    }

    #[test]
    fn deterministic_line_flags_degenerate() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let s = uniform_series(x);
        let rep = estimate_hurst(&s, &[1, 2, 4, 8, 16]).unwrap();
        assert!(rep.degenerate);
    }

    #[test]
    fn constant_series_has_zero_diffusion() {
        let s = uniform_series(vec![3.0; 64]);
        assert_eq!(estimate_diffusion(&s, 1).unwrap(), 0.0);
    }

    #[test]
    fn diffusion_shift_invariant() {
        let x = vec![0.0, 0.3, 0.1, 0.5, 0.2, 0.6, 0.4, 0.7];
        let s1 = uniform_series(x.clone());
        let s2 = uniform_series(x.iter().map(|v| v + 10.0).collect());
        let d1 = estimate_diffusion(&s1, 1).unwrap();
        let d2 = estimate_diffusion(&s2, 1).unwrap();
        assert!((d1 - d2).abs() < 1e-12 * d1.abs().max(1.0));
    }

    #[test]
    fn diffusion_scales_quadratically() {
        let x = vec![0.0, 0.3, 0.1, 0.5, 0.2, 0.6, 0.4, 0.7];
        let s1 = uniform_series(x.clone());
        let s2 = uniform_series(x.iter().map(|v| 2.0 * v).collect());
        let d1 = estimate_diffusion(&s1, 1).unwrap();
        let d2 = estimate_diffusion(&s2, 1).unwrap();
        assert!((d2 - 4.0 * d1).abs() < 1e-12);
    }

    #[test]
    fn whole_series_window_gives_single_value() {
        let x = vec![0.0, 0.3, 0.1, 0.5, 0.2, 0.6, 0.4, 0.7, 0.5, 0.9];
        let s = uniform_series(x.clone());
        let ds = rolling_diffusion(&s, 10, 1).unwrap();
        assert_eq!(ds.diffusion.len(), 1);
        assert_eq!(ds.delta[0], 0.0);

        let ds2 = rolling_diffusion(&s, 8, 2).unwrap();
        assert_eq!(ds2.diffusion.len(), 2);
        let mean_delta: f64 = ds2.delta.iter().sum::<f64>() / ds2.delta.len() as f64;
        assert!(mean_delta.abs() < 1e-12 * ds2.mean.max(1.0));
    }

    #[test]
    fn uncertainty_product_is_the_product() {
        assert_eq!(uncertainty_product(2.0, 0.5), 1.0);
        assert_eq!(uncertainty_product(1.0, 0.0169), 0.0169);
        let p = crate::ModelParams::new(3.0, 0.7).unwrap();
        assert_eq!(uncertainty_product(p.mass, p.diffusion), p.hbar_eff() / 2.0);
    }
}
