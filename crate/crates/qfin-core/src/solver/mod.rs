//! Forward problems: stationary eigenstates of the discrete Hamiltonian
//! `H = -2 m D^2 Lap + diag(Phi)` with hard-wall boundaries, Crank-Nicolson
//! time propagation (standard, varying-diffusion and perturbative variants),
//! and the Madelung decomposition of wave states.

mod eigen;
mod madelung;
mod propagate;

pub use eigen::{ground_state, ground_state_from_profile, spectrum, EigenSolution};
pub use madelung::{
    continuity_residual, madelung_decompose, recompose, ContinuityReport, MadelungFields,
};
pub use propagate::{accuracy_warning, propagate, propagate_generalized, DeltaSchedule, Mode};

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::{Error, ModelParams, Result};

/// Complex wave function on a uniform grid with its model parameters and
/// the time it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    /// Leftmost grid point.
    pub x0: f64,
    pub dx: f64,
    pub psi: Vec<Complex64>,
    pub params: ModelParams,
    /// Years.
    pub t: f64,
}

impl WaveState {
    pub fn new(x0: f64, dx: f64, psi: Vec<Complex64>, params: ModelParams) -> Result<Self> {
        if psi.len() < 8 {
            return Err(Error::Parameter(format!(
                "grid must have at least 8 points, got {}",
                psi.len()
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::Parameter(format!("dx must be positive, got {dx}")));
        }
        Ok(Self {
            x0,
            dx,
            psi,
            params,
            t: 0.0,
        })
    }

    /// Normalized Gaussian packet `exp(-(x-c)^2 / (4 sigma^2) + i k x)`,
    /// whose density has standard deviation `sigma`.
    pub fn gaussian_packet(
        x0: f64,
        dx: f64,
        n: usize,
        center: f64,
        sigma: f64,
        wavenumber: f64,
        params: ModelParams,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        let psi: Vec<Complex64> = (0..n)
            .map(|i| {
                let x = x0 + i as f64 * dx;
                let envelope = libm::exp(-(x - center) * (x - center) / (4.0 * sigma * sigma));
                let phase = wavenumber * x;
                Complex64::new(
                    envelope * libm::cos(phase),
                    envelope * libm::sin(phase),
                )
            })
            .collect();
        let mut state = Self::new(x0, dx, psi, params)?;
        state.renormalize();
        Ok(state)
    }

    /// Real state built from an eigenfunction.
    pub fn from_eigenfunction(x0: f64, dx: f64, psi: &[f64], params: ModelParams) -> Result<Self> {
        Self::new(
            x0,
            dx,
            psi.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            params,
        )
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x0 + i as f64 * self.dx).collect()
    }

    /// `sum |psi|^2 dx`; the propagators never renormalize, so drift of
    /// this value is a measured diagnostic.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn renormalize(&mut self) {
        let n = libm::sqrt(self.norm());
        for c in &mut self.psi {
            *c /= n;
        }
    }

    /// Standard deviation of the position under `|psi|^2`, by quadrature.
    pub fn position_std(&self) -> f64 {
        let p = self.density();
        let total: f64 = p.iter().sum();
        let mean: f64 = p
            .iter()
            .enumerate()
            .map(|(i, v)| (self.x0 + i as f64 * self.dx) * v)
            .sum::<f64>()
            / total;
        let var: f64 = p
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = self.x0 + i as f64 * self.dx - mean;
                d * d * v
            })
            .sum::<f64>()
            / total;
        libm::sqrt(var)
    }
}
