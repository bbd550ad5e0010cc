//! Amplitude-phase (Madelung) view of a wave state and the discrete
//! continuity-equation residual of a propagation run.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::density::DEFAULT_FLOOR;
use crate::{Error, Result};

use super::WaveState;

const PI: f64 = core::f64::consts::PI;

/// `psi = A exp(i S / h_eff)` split into its real fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungFields {
    pub a: Vec<f64>,
    /// Action, anchored to 0 at the grid center, units of `h_eff`.
    pub s: Vec<f64>,
    /// Current velocity `V = grad S / m`, 1/years.
    pub v: Vec<f64>,
    /// `P = A^2`.
    pub p: Vec<f64>,
    /// Grid indices where `|psi|` fell below the amplitude floor; the
    /// phase there is unreliable.
    pub flagged_nodes: Vec<usize>,
}

/// Split a state into amplitude, unwrapped anchored action and current
/// velocity.
pub fn madelung_decompose(state: &WaveState) -> MadelungFields {
    let n = state.len();
    let hbar = state.params.hbar_eff();
    let a: Vec<f64> = state.psi.iter().map(|c| c.norm()).collect();
    let amax = a.iter().cloned().fold(0.0f64, f64::max);
    let floor = libm::sqrt(DEFAULT_FLOOR) * amax;
    let flagged_nodes: Vec<usize> = (0..n).filter(|&i| a[i] < floor).collect();

    // unwrapped phase, left to right
    let mut theta = Vec::with_capacity(n);
    let mut offset = 0.0;
    let mut prev = 0.0;
    for (i, c) in state.psi.iter().enumerate() {
        let raw = libm::atan2(c.im, c.re);
        if i > 0 {
            let mut jump = raw + offset - prev;
            while jump > PI {
                offset -= 2.0 * PI;
                jump -= 2.0 * PI;
            }
            while jump < -PI {
                offset += 2.0 * PI;
                jump += 2.0 * PI;
            }
        }
        prev = raw + offset;
        theta.push(prev);
    }
    let center = theta[n / 2];
    let s: Vec<f64> = theta.iter().map(|t| hbar * (t - center)).collect();

    let mut v = Vec::with_capacity(n);
    let denom = 2.0 * state.dx * state.params.mass;
    v.push((s[1] - s[0]) / (state.dx * state.params.mass));
    for i in 1..n - 1 {
        v.push((s[i + 1] - s[i - 1]) / denom);
    }
    v.push((s[n - 1] - s[n - 2]) / (state.dx * state.params.mass));

    let p: Vec<f64> = a.iter().map(|x| x * x).collect();
    MadelungFields {
        a,
        s,
        v,
        p,
        flagged_nodes,
    }
}

/// Rebuild `A exp(i S / h_eff)` from decomposed fields.
pub fn recompose(fields: &MadelungFields, state: &WaveState) -> Vec<Complex64> {
    let hbar = state.params.hbar_eff();
    fields
        .a
        .iter()
        .zip(&fields.s)
        .map(|(&a, &s)| {
            let th = s / hbar;
            Complex64::new(a * libm::cos(th), a * libm::sin(th))
        })
        .collect()
}

/// Residual of the discrete continuity equation over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Pointwise residual of the last state pair (interior points).
    pub profile: Vec<f64>,
    /// Max |residual| over all pairs and interior points.
    pub max_abs: f64,
    /// RMS residual over all pairs and interior points.
    pub l2: f64,
}

/// Check `dP/dt = -grad(P V)` on consecutive states spaced `dt` apart.
/// Uses the time difference of `P` centered at the half step and the
/// average of the two flux divergences, both second order.
pub fn continuity_residual(states: &[WaveState], dt: f64) -> Result<ContinuityReport> {
    if states.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 consecutive states".into(),
        ));
    }
    let n = states[0].len();
    for s in states {
        if s.len() != n || libm::fabs(s.dx - states[0].dx) > 1e-15 {
            return Err(Error::GridMismatch);
        }
    }
    let dx = states[0].dx;
    let mut profile = Vec::new();
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut count = 0usize;
    for pair in states.windows(2) {
        let f0 = madelung_decompose(&pair[0]);
        let f1 = madelung_decompose(&pair[1]);
        let flux0: Vec<f64> = f0.p.iter().zip(&f0.v).map(|(p, v)| p * v).collect();
        let flux1: Vec<f64> = f1.p.iter().zip(&f1.v).map(|(p, v)| p * v).collect();
        profile = (1..n - 1)
            .map(|i| {
                let dpdt = (f1.p[i] - f0.p[i]) / dt;
                let div = (flux0[i + 1] + flux1[i + 1] - flux0[i - 1] - flux1[i - 1])
                    / (4.0 * dx);
                dpdt + div
            })
            .collect();
        for &r in &profile {
            max_abs = max_abs.max(libm::fabs(r));
            sum_sq += r * r;
            count += 1;
        }
    }
    Ok(ContinuityReport {
        profile,
        max_abs,
        l2: libm::sqrt(sum_sq / count as f64),
    })
}
