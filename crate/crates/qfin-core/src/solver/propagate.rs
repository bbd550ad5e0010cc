//! Crank-Nicolson propagation. The standard equation and its
//! varying-diffusion generalizations share one kernel:
//!
//! `i dpsi/dt = -D(t) Lap psi + [Phi / (2 m <D>) + extra(x, t)] psi`
//!
//! where `extra` is zero for the standard equation, the nonlinear term
//! `dD(t) (grad ln psi)^2` in full mode, and the frozen-reference term
//! `-[Lap ln psi]_0 dD(t)` in perturbative mode.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::density::DEFAULT_FLOOR;
use crate::{Error, Result};

use super::WaveState;

const FIXED_POINT_TOL: f64 = 1e-10;
const MAX_FIXED_POINT: usize = 50;

/// Time course of the diffusion fluctuation `dD(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSchedule {
    Constant(f64),
    /// `amplitude * sin(2 pi t / period)`.
    Sinusoid { amplitude: f64, period: f64 },
    /// Piecewise-linear interpolation of `(t, dD)` knots; clamped outside.
    Table(Vec<(f64, f64)>),
}

impl DeltaSchedule {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DeltaSchedule::Constant(v) => *v,
            DeltaSchedule::Sinusoid { amplitude, period } => {
                amplitude * libm::sin(2.0 * core::f64::consts::PI * t / period)
            }
            DeltaSchedule::Table(knots) => {
                if knots.is_empty() {
                    return 0.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                let last = knots[knots.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                for w in knots.windows(2) {
                    if t >= w[0].0 && t <= w[1].0 {
                        let f = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                last.1
            }
        }
    }
}

/// Treatment of the varying-diffusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Nonlinear term iterated to a fixed point within each step.
    Full,
    /// Linear step with the reference term frozen at the initial state.
    Perturbative,
}

/// Thomas solve for a complex tridiagonal system with constant
/// off-diagonal `off` and diagonal `dia`. The Crank-Nicolson matrices are
/// strongly diagonally dominant, so no pivoting is needed.
fn thomas(dia: &[Complex64], off: Complex64, rhs: &[Complex64]) -> Vec<Complex64> {
    let n = dia.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = off / dia[0];
    d[0] = rhs[0] / dia[0];
    for i in 1..n {
        let denom = dia[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Centered `grad psi / psi` with the amplitude floored as in the density
/// module, hard-wall ghost zeros outside the grid.
fn log_gradient(psi: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = psi.len();
    let amax = psi.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let floor = DEFAULT_FLOOR * amax;
    (0..n)
        .map(|i| {
            let left = if i > 0 { psi[i - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::new(0.0, 0.0) };
            let mut denom = psi[i];
            if denom.norm() < floor {
                denom = Complex64::new(floor, 0.0);
            }
            (right - left) / (2.0 * dx * denom)
        })
        .collect()
}

/// `Lap ln psi = Lap psi / psi - (grad psi / psi)^2`, same flooring.
fn log_laplacian(psi: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = psi.len();
    let amax = psi.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let floor = DEFAULT_FLOOR * amax;
    let grad = log_gradient(psi, dx);
    (0..n)
        .map(|i| {
            let left = if i > 0 { psi[i - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::new(0.0, 0.0) };
            let mut denom = psi[i];
            if denom.norm() < floor {
                denom = Complex64::new(floor, 0.0);
            }
            let lap = (right - 2.0 * psi[i] + left) / (dx * dx * denom);
            lap - grad[i] * grad[i]
        })
        .collect()
}

/// Apply `(1 - i dt/2 G)` to psi, with `G` as in the module header.
fn apply_rhs(
    psi: &[Complex64],
    dx: f64,
    dt: f64,
    diffusion: f64,
    v_over_hbar: &[f64],
    extra: &[Complex64],
) -> Vec<Complex64> {
    let n = psi.len();
    let half = Complex64::new(0.0, -0.5 * dt);
    let kin = diffusion / (dx * dx);
    (0..n)
        .map(|i| {
            let left = if i > 0 { psi[i - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::new(0.0, 0.0) };
            let g = -kin * (right + left)
                + (2.0 * kin + v_over_hbar[i]) * psi[i]
                + extra[i] * psi[i];
            psi[i] + half * g
        })
        .collect()
}

/// One Crank-Nicolson step of the shared kernel.
#[allow(clippy::too_many_arguments)]
fn cn_step(
    psi: &[Complex64],
    dx: f64,
    dt: f64,
    diff_n: f64,
    diff_np1: f64,
    v_over_hbar: &[f64],
    extra_n: &[Complex64],
    extra_np1: &[Complex64],
) -> Vec<Complex64> {
    let n = psi.len();
    let rhs = apply_rhs(psi, dx, dt, diff_n, v_over_hbar, extra_n);
    let half = Complex64::new(0.0, 0.5 * dt);
    let kin = diff_np1 / (dx * dx);
    let off = half * (-kin);
    let dia: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0, 0.0) + half * (2.0 * kin + v_over_hbar[i] + extra_np1[i]))
        .collect();
    thomas(&dia, off, &rhs)
}

fn check_inputs(state: &WaveState, potential: &[f64], dt: f64) -> Result<()> {
    if potential.len() != state.len() {
        return Err(Error::GridMismatch);
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("potential contains a non-finite entry".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// True when the step is too coarse for the stated accuracy contract
/// (`dt max|Phi| / h_eff >= 0.5`); the implicit scheme stays stable anyway.
pub fn accuracy_warning(state: &WaveState, potential: &[f64], dt: f64) -> bool {
    let max_phi = potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    dt * max_phi / state.params.hbar_eff() >= 0.5
}

/// Propagate under the standard equation for `steps` steps of `dt`.
/// Norm is never renormalized; its drift is a measured diagnostic.
pub fn propagate(
    state: &WaveState,
    potential: &[f64],
    dt: f64,
    steps: usize,
) -> Result<WaveState> {
    propagate_generalized(
        state,
        potential,
        state.params.diffusion,
        &DeltaSchedule::Constant(0.0),
        dt,
        steps,
        Mode::Perturbative,
    )
}

/// Propagate under the varying-diffusion equation with mean diffusion
/// `mean_diffusion` and fluctuation schedule `delta`.
pub fn propagate_generalized(
    state: &WaveState,
    potential: &[f64],
    mean_diffusion: f64,
    delta: &DeltaSchedule,
    dt: f64,
    steps: usize,
    mode: Mode,
) -> Result<WaveState> {
    check_inputs(state, potential, dt)?;
    if !(mean_diffusion > 0.0) {
        return Err(Error::Parameter(format!(
            "mean diffusion must be positive, got {mean_diffusion}"
        )));
    }
    let hbar = 2.0 * state.params.mass * mean_diffusion;
    let v_over_hbar: Vec<f64> = potential.iter().map(|&v| v / hbar).collect();

    // frozen reference term for the perturbative variant
    let frozen: Vec<Complex64> = match mode {
        Mode::Perturbative => log_laplacian(&state.psi, state.dx)
            .into_iter()
            .map(|v| -v)
            .collect(),
        Mode::Full => vec![Complex64::new(0.0, 0.0); state.len()],
    };

    let mut psi = state.psi.clone();
    let mut t = state.t;
    for _ in 0..steps {
        let d_n = delta.eval(t);
        let d_np1 = delta.eval(t + dt);
        for &d in &[d_n, d_np1] {
            if libm::fabs(d) >= mean_diffusion {
                return Err(Error::Regime {
                    delta: d,
                    mean: mean_diffusion,
                });
            }
        }
        let diff_n = mean_diffusion + d_n;
        let diff_np1 = mean_diffusion + d_np1;

        psi = match mode {
            Mode::Perturbative => {
                // the perturbative equation keeps the mean diffusion in the
                // Laplacian; the fluctuation enters only through the frozen
                // reference term (absorbing dD Lap psi to first order)
                let extra_n: Vec<Complex64> = frozen.iter().map(|&f| f * d_n).collect();
                let extra_np1: Vec<Complex64> = frozen.iter().map(|&f| f * d_np1).collect();
                cn_step(
                    &psi,
                    state.dx,
                    dt,
                    mean_diffusion,
                    mean_diffusion,
                    &v_over_hbar,
                    &extra_n,
                    &extra_np1,
                )
            }
            Mode::Full => {
                let w_n: Vec<Complex64> = log_gradient(&psi, state.dx)
                    .into_iter()
                    .map(|g| g * g * d_n)
                    .collect();
                // fixed point on the end-of-step nonlinear term, lagged:
                // first guess evaluates it at the start-of-step state
                let w_np1: Vec<Complex64> = log_gradient(&psi, state.dx)
                    .into_iter()
                    .map(|g| g * g * d_np1)
                    .collect();
                let mut iterate = cn_step(
                    &psi, state.dx, dt, diff_n, diff_np1, &v_over_hbar, &w_n, &w_np1,
                );
                let mut converged = false;
                for _ in 0..MAX_FIXED_POINT {
                    let w_next: Vec<Complex64> = log_gradient(&iterate, state.dx)
                        .into_iter()
                        .map(|g| g * g * d_np1)
                        .collect();
                    let next = cn_step(
                        &psi, state.dx, dt, diff_n, diff_np1, &v_over_hbar, &w_n, &w_next,
                    );
                    let diff = next
                        .iter()
                        .zip(&iterate)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0f64, f64::max);
                    iterate = next;
                    if diff < FIXED_POINT_TOL {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::Convergence {
                        iterations: MAX_FIXED_POINT,
                        residual: FIXED_POINT_TOL,
                    });
                }
                iterate
            }
        };
        t += dt;
    }

    let mut out = state.clone();
    out.psi = psi;
    out.t = t;
    Ok(out)
}
