//! Lowest eigenpairs of the real symmetric tridiagonal Hamiltonian by
//! Sturm-sequence bisection and inverse iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::inverse::PotentialProfile;
use crate::{Error, ModelParams, Result};

const RESIDUAL_BOUND: f64 = 1e-8;
const MAX_INVERSE_ITERATIONS: usize = 30;

/// One eigenpair on the grid, normalized so `sum psi^2 dx = 1` and signed
/// so the maximum-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub energy: f64,
    pub psi: Vec<f64>,
    /// 0 = ground state.
    pub index: usize,
    /// `max |H psi - E psi| / max |psi|` actually achieved.
    pub residual: f64,
}

struct Tridiagonal {
    /// Diagonal entries.
    d: Vec<f64>,
    /// Off-diagonal entries (length n - 1), all equal here but kept general.
    e: Vec<f64>,
}

impl Tridiagonal {
    fn hamiltonian(potential: &[f64], dx: f64, params: ModelParams) -> Result<Self> {
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential contains a non-finite entry".into()));
        }
        let kin = 2.0 * params.mass * params.diffusion * params.diffusion / (dx * dx);
        Ok(Self {
            d: potential.iter().map(|&v| 2.0 * kin + v).collect(),
            e: vec![-kin; potential.len() - 1],
        })
    }

    fn n(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm count via the
    /// LDL^T recurrence).
    fn count_below(&self, lambda: f64) -> usize {
        let tiny = f64::MIN_POSITIVE;
        let mut q = self.d[0] - lambda;
        let mut count = usize::from(q < 0.0);
        for i in 1..self.n() {
            if q.abs() < tiny {
                q = if q < 0.0 { -tiny } else { tiny };
            }
            q = self.d[i] - lambda - self.e[i - 1] * self.e[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = hi.abs().max(lo.abs()).max(1.0);
        let tol = 1e-15 * scale;
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // bisection exhausted the mantissa
            }
            if self.count_below(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solve `(T - lambda I) x = rhs` by tridiagonal LU with partial
    /// pivoting (the shifted system is nearly singular by design).
    fn solve_shifted(&self, lambda: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.n();
        let tiny = 1e-300;
        let safe = |v: f64| if v.abs() < tiny { tiny.copysign(v) } else { v };

        let mut dia: Vec<f64> = self.d.iter().map(|&v| v - lambda).collect();
        let mut sup = vec![0.0; n]; // first superdiagonal
        let mut sup2 = vec![0.0; n]; // second superdiagonal fill-in
        for i in 0..n - 1 {
            sup[i] = self.e[i];
        }
        let sub: Vec<f64> = self.e.clone(); // sub[i] couples rows i, i+1
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if dia[i].abs() >= sub[i].abs() {
                let fact = sub[i] / safe(dia[i]);
                dia[i + 1] -= fact * sup[i];
                b[i + 1] -= fact * b[i];
            } else {
                // rows i and i+1 interchange
                let fact = dia[i] / sub[i];
                dia[i] = sub[i];
                let temp = dia[i + 1];
                dia[i + 1] = sup[i] - fact * temp;
                if i + 1 < n - 1 {
                    sup2[i] = sup[i + 1];
                    sup[i + 1] = -fact * sup[i + 1];
                }
                sup[i] = temp;
                let tb = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tb - fact * b[i];
            }
        }

        let mut x = vec![0.0; n];
        x[n - 1] = b[n - 1] / safe(dia[n - 1]);
        if n >= 2 {
            x[n - 2] = (b[n - 2] - sup[n - 2] * x[n - 1]) / safe(dia[n - 2]);
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (b[i] - sup[i] * x[i + 1] - sup2[i] * x[i + 2]) / safe(dia[i]);
        }
        x
    }

    /// `(T - lambda I) v` evaluated in difference form: the off-diagonal
    /// couplings act on neighbour differences, so the huge kinetic-scale
    /// products cancel between nearly equal small numbers. Cuts the
    /// rounding noise of the residual by orders of magnitude on fine grids.
    fn shifted_apply_diff(&self, lambda: f64, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut r = 0.0;
                let mut diag = self.d[i] - lambda;
                if i > 0 {
                    r += self.e[i - 1] * (v[i - 1] - v[i]);
                    diag += self.e[i - 1];
                }
                if i + 1 < n {
                    r += self.e[i] * (v[i + 1] - v[i]);
                    diag += self.e[i];
                }
                r + diag * v[i]
            })
            .collect()
    }
}

/// Deterministic start vector; avoids accidental orthogonality to the
/// target eigenvector.
fn seed_vector(n: usize) -> Vec<f64> {
    let mut state = 0x9e3779b97f4a7c15u64;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

fn normalize_grid(v: &mut [f64], dx: f64) {
    // pre-scale by the largest magnitude so the sum of squares cannot
    // overflow (inverse iteration produces entries near 1e300)
    let vmax = v.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    if vmax > 0.0 && vmax.is_finite() {
        for a in v.iter_mut() {
            *a /= vmax;
        }
    }
    let norm = libm::sqrt(v.iter().map(|a| a * a).sum::<f64>() * dx);
    for a in v.iter_mut() {
        *a /= norm;
    }
}

fn orthogonalize(v: &mut [f64], others: &[&[f64]], dx: f64) {
    for o in others {
        let overlap: f64 = v.iter().zip(o.iter()).map(|(a, b)| a * b).sum::<f64>() * dx;
        for (a, b) in v.iter_mut().zip(o.iter()) {
            *a -= overlap * b;
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &a| m.max(a.abs()))
}

fn inverse_iteration(
    t: &Tridiagonal,
    lambda: f64,
    dx: f64,
    previous: &[&[f64]],
    scale: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = t.n();
    let mut v = seed_vector(n);
    normalize_grid(&mut v, dx);
    let mut lam = lambda;
    let mut best_res = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for iter in 0..MAX_INVERSE_ITERATIONS {
        if iter < 3 {
            // plain inverse iteration while the vector is still rough
            let mut next = t.solve_shifted(lam, &v);
            orthogonalize(&mut next, previous, dx);
            normalize_grid(&mut next, dx);
            v = next;
        } else {
            // iterative refinement: correct by the solved residual in the
            // complement of v, so the near-singular direction (which only
            // rescales v) cannot swamp the small correction
            let r0 = t.shifted_apply_diff(lam, &v);
            let den: f64 = v.iter().map(|a| a * a).sum();
            let c: f64 = v.iter().zip(&r0).map(|(a, b)| a * b).sum::<f64>() / den;
            let r: Vec<f64> = r0.iter().zip(&v).map(|(r, a)| r - c * a).collect();
            let z = t.solve_shifted(lam, &r);
            let cz: f64 = v.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / den;
            for i in 0..n {
                v[i] -= z[i] - cz * v[i];
            }
            orthogonalize(&mut v, previous, dx);
            normalize_grid(&mut v, dx);
        }
        // Rayleigh refinement of the eigenvalue through the accurate
        // residual, guarded so it cannot wander to a neighbour.
        let r = t.shifted_apply_diff(lam, &v);
        let den: f64 = v.iter().map(|a| a * a).sum();
        let correction: f64 = v.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / den;
        if correction.abs() < 1e-6 * scale {
            lam += correction;
        }
        let res = max_abs(&t.shifted_apply_diff(lam, &v)) / max_abs(&v);
        if res < best_res {
            best_res = res;
            best = Some((lam, v.clone()));
        }
        let target = (1e-15 * scale).max(1e-13).min(RESIDUAL_BOUND * 0.1);
        if res < target {
            break;
        }
    }
    let (lam, v) = best.unwrap();
    Ok((lam, v, best_res))
}

/// `count` lowest eigenpairs of `H = -2 m D^2 Lap + diag(potential)` with
/// hard-wall boundaries on a uniform grid of spacing `dx`.
pub fn spectrum(
    potential: &[f64],
    dx: f64,
    params: ModelParams,
    count: usize,
) -> Result<Vec<EigenSolution>> {
    let n = potential.len();
    if n < 8 {
        return Err(Error::Parameter(format!(
            "grid must have at least 8 points, got {n}"
        )));
    }
    if !(dx > 0.0) {
        return Err(Error::Parameter(format!("dx must be positive, got {dx}")));
    }
    if count == 0 || count >= n - 2 {
        return Err(Error::Parameter(format!(
            "eigenpair count {count} must lie in [1, {})",
            n - 2
        )));
    }
    let t = Tridiagonal::hamiltonian(potential, dx, params)?;
    let (glo, ghi) = t.gershgorin();
    let scale = ghi.abs().max(glo.abs()).max(1.0);

    let mut solutions: Vec<EigenSolution> = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = t.eigenvalue(k);
        // Only orthogonalize against near-degenerate neighbours; distinct
        // eigenvalues separate on their own under inverse iteration.
        let close: Vec<&[f64]> = solutions
            .iter()
            .filter(|s| (s.energy - lambda).abs() < 1e-8 * scale)
            .map(|s| s.psi.as_slice())
            .collect();
        let (energy, mut psi, residual) = inverse_iteration(&t, lambda, dx, &close, scale)?;
        if residual > RESIDUAL_BOUND {
            return Err(Error::Convergence {
                iterations: MAX_INVERSE_ITERATIONS,
                residual,
            });
        }
        // sign convention: maximum-magnitude entry positive
        let (imax, _) = psi
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(im, m), (i, &v)| {
                if v.abs() > m {
                    (i, v.abs())
                } else {
                    (im, m)
                }
            });
        if psi[imax] < 0.0 {
            for a in &mut psi {
                *a = -*a;
            }
        }
        solutions.push(EigenSolution {
            energy,
            psi,
            index: k,
            residual,
        });
    }
    Ok(solutions)
}

/// Lowest eigenpair; see [`spectrum`].
pub fn ground_state(potential: &[f64], dx: f64, params: ModelParams) -> Result<EigenSolution> {
    Ok(spectrum(potential, dx, params, 1)?.remove(0))
}

/// Ground state of the Hamiltonian built from an extracted profile. Uses
/// the full-grid hard-wall potential column, so the amplitude the profile
/// was extracted from is recovered exactly (to solver tolerance) and the
/// ground energy equals the profile's anchoring offset.
pub fn ground_state_from_profile(profile: &PotentialProfile) -> Result<EigenSolution> {
    let params = ModelParams::new(profile.provenance.mass, profile.provenance.diffusion)?;
    ground_state(&profile.phi_full, profile.provenance.dx, params)
}
