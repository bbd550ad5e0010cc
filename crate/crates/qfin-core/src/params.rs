use alloc::format;

use crate::{Error, Result};

/// Model parameters of the price-space dynamics: the asset inertial mass `m`
/// and the diffusion coefficient `D` (1/years). The effective Planck constant
/// is fixed by the identification `h_eff = 2 m D` and never set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mass: f64,
    pub diffusion: f64,
}

impl ModelParams {
    pub fn new(mass: f64, diffusion: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Parameter(format!("mass must be positive, got {mass}")));
        }
        if !(diffusion > 0.0) || !diffusion.is_finite() {
            return Err(Error::Parameter(format!(
                "diffusion must be positive, got {diffusion}"
            )));
        }
        Ok(Self { mass, diffusion })
    }

    /// `h_eff = 2 m D`, exact by construction.
    pub fn hbar_eff(&self) -> f64 {
        2.0 * self.mass * self.diffusion
    }

    /// Uncertainty product `epsilon * tau = m D`, identically `h_eff / 2`.
    pub fn uncertainty_product(&self) -> f64 {
        self.mass * self.diffusion
    }
}

impl Default for ModelParams {
    /// Unit mass; energies are then reported per unit mass.
    fn default() -> Self {
        Self {
            mass: 1.0,
            diffusion: 1.0,
        }
    }
}
