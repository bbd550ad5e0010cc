//! Seeded synthetic-path generators used as oracles for the estimators:
//! geometric Brownian coordinates, exact-covariance fractional Brownian
//! motion, and the Nelson diffusion whose equilibrium density is `|psi|^2`.
//!
//! All randomness comes from the counter-based ChaCha8 stream cipher with
//! Box-Muller normals, so every path is a pure, bit-reproducible function
//! of its parameters and seed. Ensemble paths draw from per-path streams
//! derived from the master seed, so generation order never matters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{build_density_of, DensityGrid};
use crate::solver::{madelung_decompose, WaveState};
use crate::{CoordinateSeries, Error, ModelParams, Result};

/// Standard normal draws from a ChaCha8 stream via Box-Muller.
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Independent stream `index` of the same master seed.
    pub fn from_seed_stream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng, spare: None }
    }

    fn uniform(&mut self) -> f64 {
        // 53 random bits in (0, 1]
        (((self.rng.next_u64() >> 11) + 1) as f64) / (1u64 << 53) as f64
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let th = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(th));
        r * libm::cos(th)
    }
}

/// A set of paths sharing one time grid, with the generator provenance
/// needed to regenerate them bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub t: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
    pub generator: String,
    pub seed: u64,
}

impl PathEnsemble {
    /// Positions of every path at time index `idx` (or the final time).
    pub fn cross_section(&self, idx: Option<usize>) -> Result<Vec<f64>> {
        let i = idx.unwrap_or(self.t.len() - 1);
        if i >= self.t.len() {
            return Err(Error::Parameter(format!(
                "time index {i} out of range (0..{})",
                self.t.len()
            )));
        }
        Ok(self.paths.iter().map(|p| p[i]).collect())
    }
}

/// Arithmetic Brownian coordinates `x_{i+1} = x_i + mu dt + sigma sqrt(dt) z`
/// starting at 0: the log-price path of geometric Brownian motion. True
/// parameters are `H = 1/2` and `D = sigma^2 / 2`.
pub fn gbm_path(sigma: f64, mu: f64, n: usize, dt: f64, seed: u64) -> Result<CoordinateSeries> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 steps, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let mut src = NormalSource::from_seed(seed);
    let sdt = sigma * libm::sqrt(dt);
    let mut x = Vec::with_capacity(n);
    x.push(0.0);
    for _ in 1..n {
        let prev = *x.last().unwrap();
        x.push(prev + mu * dt + sdt * src.next_normal());
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    CoordinateSeries::new(t, x)
}

/// Target autocovariance of unit-variance fractional Gaussian noise.
fn fgn_covariance(h: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * (libm::pow(k + 1.0, 2.0 * h) - 2.0 * libm::pow(k, 2.0 * h)
        + libm::pow(libm::fabs(k - 1.0), 2.0 * h))
}

/// Fractional Brownian coordinates with exact increment covariance, by the
/// Hosking (Levinson-recursion) factorization of the fGn covariance.
/// `Var(x_k - x_0) = scale^2 (k dt)^{2H}` in distribution.
pub fn fbm_path(h: f64, n: usize, dt: f64, scale: f64, seed: u64) -> Result<CoordinateSeries> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("H must lie in (0, 1), got {h}")));
    }
    if n < 2 || n > 1 << 14 {
        return Err(Error::Parameter(format!(
            "steps must lie in [2, 16384] for the exact-covariance method, got {n}"
        )));
    }
    if !(dt > 0.0) || !(scale > 0.0) {
        return Err(Error::Parameter("dt and scale must be positive".into()));
    }
    let mut src = NormalSource::from_seed(seed);
    let m = n - 1; // number of increments

    // Hosking recursion: conditional mean coefficients phi, innovation
    // variance v, exact for the target covariance.
    let mut phi = alloc::vec![0.0f64; m];
    let mut tmp = alloc::vec![0.0f64; m];
    let mut fgn = Vec::with_capacity(m);
    let mut v = 1.0;
    fgn.push(src.next_normal());
    for i in 1..m {
        // reflection coefficient
        let mut tau = fgn_covariance(h, i);
        for j in 0..i - 1 {
            tau -= phi[j] * fgn_covariance(h, i - 1 - j);
        }
        let kappa = tau / v;
        tmp[..i - 1].copy_from_slice(&phi[..i - 1]);
        for j in 0..i - 1 {
            phi[j] = tmp[j] - kappa * tmp[i - 2 - j];
        }
        phi[i - 1] = kappa;
        v *= 1.0 - kappa * kappa;
        if !(v > 0.0) {
            return Err(Error::NonFinite(format!(
                "covariance factorization broke down at step {i} (H = {h})"
            )));
        }
        let mut mean = 0.0;
        for j in 0..i {
            mean += phi[j] * fgn[i - 1 - j];
        }
        fgn.push(mean + libm::sqrt(v) * src.next_normal());
    }

    let step_scale = scale * libm::pow(dt, h);
    let mut x = Vec::with_capacity(n);
    x.push(0.0);
    for g in &fgn {
        let prev = *x.last().unwrap();
        x.push(prev + step_scale * g);
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    CoordinateSeries::new(t, x)
}

/// Drift field for the Nelson diffusion, on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    pub x0: f64,
    pub dx: f64,
    /// Forward drift `b+ = V + U`.
    pub b: Vec<f64>,
    /// Density to draw initial positions from (normalized internally);
    /// uniform over the grid when absent.
    pub initial: Option<Vec<f64>>,
}

impl DriftField {
    /// Forward drift of a wave state: current velocity `V` from the phase
    /// plus osmotic velocity `U = D grad P / P` from the amplitude.
    pub fn from_wave(state: &WaveState) -> Self {
        let fields = madelung_decompose(state);
        let n = state.len();
        let d = state.params.diffusion;
        let amax = fields.p.iter().cloned().fold(0.0f64, f64::max);
        let floor = crate::density::DEFAULT_FLOOR * amax;
        let pf: Vec<f64> = fields.p.iter().map(|&p| if p < floor { floor } else { p }).collect();
        let mut u = Vec::with_capacity(n);
        u.push(d * (pf[1] - pf[0]) / (state.dx * pf[0]));
        for i in 1..n - 1 {
            u.push(d * (pf[i + 1] - pf[i - 1]) / (2.0 * state.dx * pf[i]));
        }
        u.push(d * (pf[n - 1] - pf[n - 2]) / (state.dx * pf[n - 1]));
        let b: Vec<f64> = fields.v.iter().zip(&u).map(|(v, u)| v + u).collect();
        Self {
            x0: state.x0,
            dx: state.dx,
            b,
            initial: Some(fields.p),
        }
    }

    fn hi(&self) -> f64 {
        self.x0 + (self.b.len() - 1) as f64 * self.dx
    }

    fn drift_at(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.dx;
        let i = libm::floor(pos) as isize;
        let n = self.b.len() as isize;
        if i < 0 {
            return self.b[0];
        }
        if i >= n - 1 {
            return self.b[(n - 1) as usize];
        }
        let f = pos - i as f64;
        self.b[i as usize] * (1.0 - f) + self.b[i as usize + 1] * f
    }

    /// Inverse-CDF sample of the initial density (uniform when none).
    fn sample_initial(&self, u: f64) -> f64 {
        match &self.initial {
            None => self.x0 + u * (self.hi() - self.x0),
            Some(p) => {
                let total: f64 = p.iter().sum();
                let target = u * total;
                let mut acc = 0.0;
                for (i, &w) in p.iter().enumerate() {
                    let next = acc + w;
                    if target <= next || i == p.len() - 1 {
                        let f = if w > 0.0 { (target - acc) / w } else { 0.5 };
                        // within cell i, centered on the grid point
                        let x = self.x0 + (i as f64 - 0.5 + f.clamp(0.0, 1.0)) * self.dx;
                        return x.clamp(self.x0, self.hi());
                    }
                    acc = next;
                }
                self.hi()
            }
        }
    }
}

/// Euler-Maruyama ensemble of the forward Nelson process
/// `dX = b+(X) dt + sqrt(2 D) dW`, reflected at the grid boundaries.
pub fn nelson_sample(
    drift: &DriftField,
    params: ModelParams,
    n_paths: usize,
    steps: usize,
    dt: f64,
    seed: u64,
) -> Result<PathEnsemble> {
    if drift.b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("drift field contains a non-finite entry".into()));
    }
    if n_paths == 0 {
        return Err(Error::Parameter("need at least one path".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let lo = drift.x0;
    let hi = drift.hi();
    let noise = libm::sqrt(2.0 * params.diffusion * dt);
    let t: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let mut paths = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut src = NormalSource::from_seed_stream(seed, p as u64);
        let mut x = drift.sample_initial(src.uniform());
        let mut path = Vec::with_capacity(steps + 1);
        path.push(x);
        for _ in 0..steps {
            x += drift.drift_at(x) * dt + noise * src.next_normal();
            // reflect into [lo, hi]
            let span = hi - lo;
            while x < lo || x > hi {
                if x < lo {
                    x = 2.0 * lo - x;
                } else {
                    x = 2.0 * hi - x;
                }
                if !(x.is_finite()) || libm::fabs(x - lo) > 1e3 * span {
                    return Err(Error::NonFinite("path escaped the grid".into()));
                }
            }
            path.push(x);
        }
        paths.push(path);
    }
    Ok(PathEnsemble {
        t,
        paths,
        generator: String::from("nelson"),
        seed,
    })
}

/// Histogram of an ensemble cross-section.
pub fn ensemble_histogram(
    ensemble: &PathEnsemble,
    idx: Option<usize>,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<DensityGrid> {
    let xs = ensemble.cross_section(idx)?;
    build_density_of(&xs, bins, range)
}
