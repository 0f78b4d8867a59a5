use super::eigen::eigensolve;
use super::matrix::Hamiltonian;
use super::{BasisSpec, BuildOptions, DEFAULT_MAX_DIM};
use crate::circuit::{CircuitParams, JunctionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-7;
const MIN_FLUXONIUM: usize = 10;

fn lowest_levels<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    n: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let h = Hamiltonian::<T>::new(BasisSpec::uncoupled(n), BuildOptions::default())?;
    let eig = eigensolve(h.fluxonium_matrix(junction, params, phi_ext)?)?;
    Ok(eig.values.iter().take(count).map(|v| v.to_f64_lossy()).collect())
}

/// Smallest fluxonium basis (growing by 1.5x per trial from 10) whose lowest
/// `target_levels` eigenvalues move by less than `rel_tol` on the next growth
/// step. The returned spec is uncoupled; set `n_resonator` afterwards.
pub fn converge_basis<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    target_levels: usize,
    rel_tol: f64,
) -> Result<BasisSpec> {
    if !(rel_tol > 0.0) {
        return Err(Error::invalid(format!("rel_tol must be > 0, got {rel_tol}")));
    }
    if target_levels == 0 {
        return Err(Error::invalid("target_levels must be >= 1"));
    }
    let floor = params.plasma_frequency().to_f64_lossy();
    let mut n = MIN_FLUXONIUM.max(target_levels + 2);
    let mut current = lowest_levels(junction, params, phi_ext, n, target_levels)?;
    let mut last_delta = f64::INFINITY;
    loop {
        let next_n = (n * 3).div_ceil(2);
        if next_n > DEFAULT_MAX_DIM {
            return Err(Error::Convergence {
                what: format!("fluxonium basis beyond {DEFAULT_MAX_DIM} states"),
                last_delta,
            });
        }
        let next = lowest_levels(junction, params, phi_ext, next_n, target_levels)?;
        last_delta =
            current.iter().zip(&next).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor)).fold(0.0, f64::max);
        if last_delta < rel_tol {
            return Ok(BasisSpec::uncoupled(n));
        }
        n = next_n;
        current = next;
    }
}
