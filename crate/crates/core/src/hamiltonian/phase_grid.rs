//! Finite-difference solver for the uncoupled fluxonium on a phase grid.
//!
//! Independent of the oscillator-basis route: the charging term is the
//! three-point second difference, the potential is sampled pointwise, the
//! grid ends are hard walls, and the lowest eigenvalues of the resulting
//! tridiagonal matrix come from Sturm-sequence bisection. Each solve runs on
//! two grids (spacing `h` and `h/2`); their difference is the convergence
//! check and the returned levels are the Richardson combination
//! `(4 E_{h/2} - E_h) / 3`.

use crate::circuit::{potential_eval, CircuitParams, JunctionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest level shift between the two grids that is still accepted, GHz.
pub const GRID_CONVERGENCE_GHZ: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    /// Grid covers `[φ_ext - half_span, φ_ext + half_span]`, radians.
    pub half_span: f64,
    /// Interior points of the coarse grid; the fine grid has `2 points + 1`.
    pub points: usize,
    /// Number of lowest levels returned.
    pub levels: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self { half_span: 16.0, points: 40_001, levels: 6 }
    }
}

impl PhaseGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_span >= 12.0) {
            return Err(Error::invalid(format!(
                "phase grid must span at least ±12 rad around phi_ext, got ±{}",
                self.half_span
            )));
        }
        if self.points < 2001 {
            return Err(Error::invalid(format!("phase grid needs >= 2001 points, got {}", self.points)));
        }
        if self.levels < 1 {
            return Err(Error::invalid("phase grid must return at least one level"));
        }
        Ok(())
    }
}

/// Lowest `grid.levels` eigenvalues of the uncoupled fluxonium, GHz.
pub fn phase_grid_oracle<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    grid: PhaseGrid,
) -> Result<Vec<T>> {
    grid.validate()?;
    junction.validate()?;
    let coarse = solve_grid(junction, params, phi_ext, grid.half_span, grid.points, grid.levels)?;
    let fine = solve_grid(junction, params, phi_ext, grid.half_span, 2 * grid.points + 1, grid.levels)?;
    let shift = coarse.iter().zip(&fine).map(|(c, f)| (*c - *f).abs().to_f64_lossy()).fold(0.0, f64::max);
    if shift > GRID_CONVERGENCE_GHZ {
        return Err(Error::Convergence { what: format!("phase grid with {} points", grid.points), last_delta: shift });
    }
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    Ok(coarse.iter().zip(&fine).map(|(&c, &f)| (four * f - c) / three).collect())
}

fn solve_grid<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    half_span: f64,
    points: usize,
    levels: usize,
) -> Result<Vec<T>> {
    let span = T::lit(2.0 * half_span);
    let dx = span / T::from_usize_lossy(points + 1);
    let start = phi_ext - T::lit(half_span);
    let kinetic = T::lit(4.0) * params.e_c / (dx * dx);
    let mut diag = Vec::with_capacity(points);
    for i in 0..points {
        let phi = start + dx * T::from_usize_lossy(i + 1);
        diag.push(T::lit(2.0) * kinetic + potential_eval(junction, params.e_l, phi, phi_ext)?);
    }
    let off = -kinetic;
    let off_sq = off * off;
    let tri = Tridiagonal { diag: &diag, off_sq, off_abs: kinetic };
    (0..levels.min(points)).map(|k| tri.eigenvalue(k)).collect()
}

/// Symmetric tridiagonal matrix with a constant off-diagonal.
struct Tridiagonal<'a, T> {
    diag: &'a [T],
    off_sq: T,
    off_abs: T,
}

impl<T: Scalar> Tridiagonal<'_, T> {
    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: T) -> usize {
        let pivmin = T::lit(f64::MIN_POSITIVE.sqrt()) * (T::one() + self.off_sq);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for (i, &d) in self.diag.iter().enumerate() {
            if i > 0 {
                q = d - x - self.off_sq / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> Result<T> {
        let two = T::lit(2.0);
        let mut lo = self.diag.iter().fold(self.diag[0], |m, &d| m.min(d)) - two * self.off_abs;
        let mut step = T::one();
        let mut hi = lo + step;
        let mut guard = 0;
        while self.count_below(hi) <= k {
            lo = hi;
            step *= two;
            hi = lo + step;
            guard += 1;
            if guard > 200 {
                return Err(Error::numerical("bisection bracket for grid eigenvalue not found"));
            }
        }
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            let scale = lo.abs().max(hi.abs()).max(T::one());
            if hi - lo <= T::lit(4.0 * T::EPSILON) * scale {
                break;
            }
        }
        Ok((lo + hi) / two)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_levels_are_exact_to_1e6() {
        let p = CircuitParams::DEVICE_A;
        let w = p.plasma_frequency();
        let levels = phase_grid_oracle(&JunctionModel::sinusoidal(0.0), &p, 0.0, PhaseGrid::default()).unwrap();
        assert!(levels.len() >= 6);
        for (k, e) in levels.iter().enumerate() {
            let want = (k as f64 + 0.5) * w;
            assert!(((e - want) / want).abs() < 1e-6, "level {k}: {e} vs {want}");
        }
    }

    #[test]
    fn junction_free_spacing_is_plasma_frequency() {
        let p = CircuitParams::DEVICE_A;
        let levels = phase_grid_oracle(&JunctionModel::sinusoidal(0.0), &p, 1.3, PhaseGrid::default()).unwrap();
        for pair in levels.windows(2) {
            assert!((pair[1] - pair[0] - 3.6277).abs() < 1e-4);
        }
    }

    #[test]
    fn grid_requirements_enforced() {
        let p = CircuitParams::DEVICE_A;
        let j = JunctionModel::sinusoidal(1.0);
        let narrow = PhaseGrid { half_span: 6.0, ..PhaseGrid::default() };
        assert!(phase_grid_oracle(&j, &p, 0.0, narrow).is_err());
        let sparse = PhaseGrid { points: 1000, ..PhaseGrid::default() };
        assert!(phase_grid_oracle(&j, &p, 0.0, sparse).is_err());
    }

    #[test]
    fn coarse_grid_reports_non_convergence() {
        let p = CircuitParams::DEVICE_A;
        let grid = PhaseGrid { points: 2001, ..PhaseGrid::default() };
        let err = phase_grid_oracle(&JunctionModel::sinusoidal(9.6), &p, 0.0, grid).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }), "{err}");
    }
}
