//! The empirical inverse problem: extract the potential `Phi - E` from an
//! occupancy density via the stationary relation
//! `(1/m)(Phi - E) = 2 D^2 (Lap sqrt P) / sqrt P`, plus the Bohmian
//! diagnostics (quantum potential, osmotic velocity, mean osmotic energy).

use alloc::format;
use alloc::vec::Vec;

use crate::density::{amplitude, DensityGrid, DEFAULT_FLOOR};
use crate::{Error, ModelParams, Result};

/// Parameters the extraction was run with, carried along for provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub mass: f64,
    pub diffusion: f64,
    pub dx: f64,
    pub floor_eps: f64,
}

/// Extracted potential on the interior of the density grid, together with
/// the Bohmian fields and the full-grid hard-wall extraction used by the
/// forward solver round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    /// Interior bin centers (endpoints dropped).
    pub x: Vec<f64>,
    /// `Phi - E` on the interior, known only up to the additive constant E.
    pub phi_minus_e: Vec<f64>,
    /// Same values shifted so the interior minimum sits at 0.
    pub phi_anchored: Vec<f64>,
    /// Quantum potential `Q = -(h_eff^2 / 2m) Lap A / A`; equals
    /// `-(Phi - E)` pointwise for a stationary density.
    pub q: Vec<f64>,
    /// Osmotic velocity `U = D grad P / P`, 1/years.
    pub u: Vec<f64>,
    /// Full grid including endpoints.
    pub x_full: Vec<f64>,
    /// Anchored potential on the full grid, where the Laplacian at the
    /// endpoints uses the same hard-wall ghost zeros as the solver. By
    /// construction the amplitude used for the extraction is an exact
    /// discrete eigenvector of the Hamiltonian built from this column.
    pub phi_full: Vec<f64>,
    /// Anchoring shift of `phi_full`; the round-trip ground energy.
    pub full_offset: f64,
    pub provenance: Provenance,
}

/// Central three-point second difference; output lives on the interior.
pub fn second_derivative(values: &[f64], dx: f64) -> Result<Vec<f64>> {
    if values.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 grid points, got {}",
            values.len()
        )));
    }
    if !(dx > 0.0) {
        return Err(Error::Parameter(format!("dx must be positive, got {dx}")));
    }
    let inv = 1.0 / (dx * dx);
    Ok(values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) * inv)
        .collect())
}

fn floored(grid: &DensityGrid) -> Result<DensityGrid> {
    if grid.a.iter().all(|&a| a > 0.0) {
        Ok(grid.clone())
    } else {
        amplitude(grid, if grid.floor_eps > 0.0 { grid.floor_eps } else { DEFAULT_FLOOR })
    }
}

/// Laplacian of the amplitude on the full grid, with hard-wall ghost zeros
/// just outside both endpoints.
fn amplitude_laplacian_walled(a: &[f64], dx: f64) -> Vec<f64> {
    let n = a.len();
    let inv = 1.0 / (dx * dx);
    let mut lap = Vec::with_capacity(n);
    lap.push((a[1] - 2.0 * a[0]) * inv);
    for i in 1..n - 1 {
        lap.push((a[i + 1] - 2.0 * a[i] + a[i - 1]) * inv);
    }
    lap.push((-2.0 * a[n - 1] + a[n - 2]) * inv);
    lap
}

/// Extract `Phi - E` from a density. The interior columns reproduce the
/// histogram-and-curvature presentation of the stationary relation; the
/// full-grid column closes the loop with the forward solver.
pub fn extract_potential(grid: &DensityGrid, params: ModelParams) -> Result<PotentialProfile> {
    if grid.len() < 5 {
        return Err(Error::Parameter(format!(
            "need at least 5 bins, got {}",
            grid.len()
        )));
    }
    let g = floored(grid)?;
    let n = g.len();
    let coeff = 2.0 * params.mass * params.diffusion * params.diffusion;
    let lap = amplitude_laplacian_walled(&g.a, g.dx);
    let raw: Vec<f64> = (0..n).map(|i| coeff * lap[i] / g.a[i]).collect();

    let phi_minus_e: Vec<f64> = raw[1..n - 1].to_vec();
    let interior_min = phi_minus_e.iter().cloned().fold(f64::INFINITY, f64::min);
    let phi_anchored: Vec<f64> = phi_minus_e.iter().map(|v| v - interior_min).collect();
    let q: Vec<f64> = phi_minus_e.iter().map(|v| -v).collect();

    // Osmotic velocity from the floored density so the ratio stays finite.
    let pf: Vec<f64> = g.a.iter().map(|a| a * a).collect();
    let u: Vec<f64> = (1..n - 1)
        .map(|i| params.diffusion * (pf[i + 1] - pf[i - 1]) / (2.0 * g.dx) / pf[i])
        .collect();

    let full_min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let full_offset = -full_min;
    let phi_full: Vec<f64> = raw.iter().map(|v| v + full_offset).collect();

    Ok(PotentialProfile {
        x: g.x[1..n - 1].to_vec(),
        phi_minus_e,
        phi_anchored,
        q,
        u,
        x_full: g.x.clone(),
        phi_full,
        full_offset,
        provenance: Provenance {
            mass: params.mass,
            diffusion: params.diffusion,
            dx: g.dx,
            floor_eps: g.floor_eps,
        },
    })
}

/// Quantum potential `Q = -2 m D^2 Lap A / A` on the interior grid.
pub fn quantum_potential(grid: &DensityGrid, params: ModelParams) -> Result<Vec<f64>> {
    Ok(extract_potential(grid, params)?.q)
}

/// Osmotic velocity `U = D grad P / P` on the interior grid.
pub fn osmotic_velocity(grid: &DensityGrid, params: ModelParams) -> Result<Vec<f64>> {
    if grid.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 bins, got {}",
            grid.len()
        )));
    }
    let g = floored(grid)?;
    let n = g.len();
    let pf: Vec<f64> = g.a.iter().map(|a| a * a).collect();
    Ok((1..n - 1)
        .map(|i| params.diffusion * (pf[i + 1] - pf[i - 1]) / (2.0 * g.dx) / pf[i])
        .collect())
}

/// Mean osmotic energy `<Q> = integral of (1/2) m U^2 P dx` by trapezoidal
/// quadrature over the interior grid.
pub fn mean_osmotic_energy(grid: &DensityGrid, params: ModelParams) -> Result<f64> {
    let g = floored(grid)?;
    let u = osmotic_velocity(&g, params)?;
    let n = g.len();
    let integrand: Vec<f64> = (1..n - 1)
        .map(|i| 0.5 * params.mass * u[i - 1] * u[i - 1] * g.a[i] * g.a[i])
        .collect();
    let mut sum = 0.0;
    for w in integrand.windows(2) {
        sum += 0.5 * (w[0] + w[1]) * g.dx;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityGrid;

    fn gaussian_grid(n: usize, sigma: f64, half_width: f64) -> DensityGrid {
        let dx = 2.0 * half_width / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        let p: Vec<f64> = x
            .iter()
            .map(|&v| (-v * v / (2.0 * sigma * sigma)).exp())
            .collect();
        DensityGrid::from_density(x, p).unwrap()
    }

    #[test]
    fn second_derivative_of_constant_is_zero() {
        let d = second_derivative(&[5.0; 7], 0.3).unwrap();
        assert_eq!(d, vec![0.0; 5]);
    }

    #[test]
    fn second_derivative_exact_for_quadratics() {
        let vals: Vec<f64> = (0..9).map(|i| (i as f64) * (i as f64)).collect();
        let d = second_derivative(&vals, 1.0).unwrap();
        for v in d {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        let dx = 0.01;
        let vals: Vec<f64> = (0..629).map(|i| (i as f64 * dx).sin()).collect();
        let d = second_derivative(&vals, dx).unwrap();
        let mut max_err: f64 = 0.0;
        for (i, v) in d.iter().enumerate() {
            let x = (i + 1) as f64 * dx;
            max_err = max_err.max((v + x.sin()).abs());
        }
        assert!(max_err < 1e-4, "max error {max_err}");
    }

    #[test]
    fn second_derivative_needs_three_points() {
        assert!(second_derivative(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn flat_density_gives_zero_potential_and_velocity() {
        let n = 21;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let g = DensityGrid::from_density(x, vec![1.0; n]).unwrap();
        let params = ModelParams::new(1.0, 0.2).unwrap();
        let prof = extract_potential(&g, params).unwrap();
        for &v in &prof.phi_minus_e {
            assert!(v.abs() < 1e-12);
        }
        for &v in &prof.u {
            assert!(v.abs() < 1e-12);
        }
        assert!(mean_osmotic_energy(&g, params).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_yields_harmonic_well() {
        let sigma = 0.7;
        let params = ModelParams::new(1.3, 0.4).unwrap();
        let g = gaussian_grid(201, sigma, 5.0 * sigma);
        let prof = extract_potential(&g, params).unwrap();
        let coeff = 2.0 * params.mass * params.diffusion * params.diffusion;
        // R^2 of numeric vs analytic harmonic well on the interior
        let analytic: Vec<f64> = prof
            .x
            .iter()
            .map(|&x| coeff * (x * x / (4.0 * sigma.powi(4)) - 1.0 / (2.0 * sigma * sigma)))
            .collect();
        let mean: f64 = analytic.iter().sum::<f64>() / analytic.len() as f64;
        let ss_tot: f64 = analytic.iter().map(|v| (v - mean) * (v - mean)).sum();
        let ss_res: f64 = prof
            .phi_minus_e
            .iter()
            .zip(&analytic)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.99, "R^2 = {r2}");
    }

    #[test]
    fn quantum_potential_is_minus_phi() {
        let g = gaussian_grid(101, 1.0, 4.0);
        let params = ModelParams::new(1.0, 0.3).unwrap();
        let prof = extract_potential(&g, params).unwrap();
        let q = quantum_potential(&g, params).unwrap();
        for i in 0..q.len() {
            assert!((q[i] + prof.phi_minus_e[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn quantum_potential_at_gaussian_center() {
        let sigma = 0.9;
        let params = ModelParams::new(2.0, 0.25).unwrap();
        // odd count => a grid point sits exactly at x = 0
        let g = gaussian_grid(201, sigma, 4.0 * sigma);
        let q = quantum_potential(&g, params).unwrap();
        let center = q.len() / 2;
        let expected = params.mass * params.diffusion * params.diffusion / (sigma * sigma);
        assert!(
            (q[center] - expected).abs() < 2e-3 * expected.abs(),
            "Q(0) = {}, expected {expected}",
            q[center]
        );
    }

    #[test]
    fn osmotic_velocity_of_gaussian() {
        let sigma = 0.8;
        let params = ModelParams::new(1.0, 0.15).unwrap();
        let g = gaussian_grid(201, sigma, 4.0 * sigma);
        let u = osmotic_velocity(&g, params).unwrap();
        for (i, &ui) in u.iter().enumerate() {
            let x = g.x[i + 1];
            let expected = -params.diffusion * x / (sigma * sigma);
            assert!(
                (ui - expected).abs() < 5e-3 * (expected.abs() + params.diffusion),
                "U({x}) = {ui}, expected {expected}"
            );
        }
        // antisymmetry on a symmetric grid
        let n = u.len();
        for i in 0..n / 2 {
            assert!((u[i] + u[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_osmotic_energy_of_gaussian() {
        let sigma = 0.6;
        let params = ModelParams::new(1.5, 0.2).unwrap();
        let g = gaussian_grid(201, sigma, 6.0 * sigma);
        let got = mean_osmotic_energy(&g, params).unwrap();
        let expected = 0.5 * params.mass * params.diffusion * params.diffusion / (sigma * sigma);
        assert!(
            (got - expected).abs() < 0.01 * expected,
            "<Q> = {got}, expected {expected}"
        );

        // integration-by-parts consistency: <Q> = -integral (Phi - E) P dx
        let prof = extract_potential(&g, params).unwrap();
        let mut by_parts = 0.0;
        let integrand: Vec<f64> = prof
            .phi_minus_e
            .iter()
            .enumerate()
            .map(|(i, &v)| -v * g.p[i + 1])
            .collect();
        for w in integrand.windows(2) {
            by_parts += 0.5 * (w[0] + w[1]) * g.dx;
        }
        assert!(
            (by_parts - got).abs() < 0.02 * expected,
            "by-parts {by_parts} vs quadrature {got}"
        );
    }

    #[test]
    fn potential_scales_with_diffusion_squared() {
        let g = gaussian_grid(101, 1.0, 4.0);
        let p1 = extract_potential(&g, ModelParams::new(1.0, 0.1).unwrap()).unwrap();
        let p2 = extract_potential(&g, ModelParams::new(1.0, 0.2).unwrap()).unwrap();
        for i in 0..p1.phi_minus_e.len() {
            assert!((p2.phi_minus_e[i] - 4.0 * p1.phi_minus_e[i]).abs() < 1e-12);
        }
    }
}
