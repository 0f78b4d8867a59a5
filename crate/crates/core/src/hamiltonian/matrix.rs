use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::quadrature::{HermiteQuadrature, MAX_NODES};
use super::{BasisSpec, BuildOptions, CouplingGauge, QUADRATURE_TOL};
use crate::circuit::{CircuitParams, JunctionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Matrix builder holding the quadrature tables for one basis size.
///
/// Immutable after construction; share it by reference across threads.
#[derive(Debug, Clone)]
pub struct Hamiltonian<T> {
    basis: BasisSpec,
    options: BuildOptions,
    /// Node counts: base first, then doublings (only when verifying).
    node_counts: Vec<usize>,
    /// Tables for `node_counts`, built on first use.
    ladder: Vec<OnceLock<HermiteQuadrature<T>>>,
}

impl<T: Scalar> Hamiltonian<T> {
    pub fn new(basis: BasisSpec, options: BuildOptions) -> Result<Self> {
        basis.validate()?;
        let nodes = options.nodes.unwrap_or_else(|| basis.default_nodes());
        if nodes < basis.default_nodes() {
            return Err(Error::invalid(format!(
                "node count {nodes} below 2 n_fluxonium + 32 = {}",
                basis.default_nodes()
            )));
        }
        let mut node_counts = vec![nodes];
        if options.verify_quadrature {
            let mut n = 2 * nodes;
            while n <= MAX_NODES {
                node_counts.push(n);
                n *= 2;
            }
            if node_counts.len() == 1 {
                return Err(Error::invalid(format!(
                    "cannot verify quadrature: doubling {nodes} nodes exceeds {MAX_NODES}"
                )));
            }
        }
        let ladder: Vec<OnceLock<HermiteQuadrature<T>>> = node_counts.iter().map(|_| OnceLock::new()).collect();
        let base = HermiteQuadrature::new(basis.n_fluxonium, nodes)?;
        let _ = ladder[0].set(base);
        Ok(Self { basis, options, node_counts, ladder })
    }

    fn rung(&self, i: usize) -> Result<&HermiteQuadrature<T>> {
        if let Some(q) = self.ladder[i].get() {
            return Ok(q);
        }
        let q = HermiteQuadrature::new(self.basis.n_fluxonium, self.node_counts[i])?;
        Ok(self.ladder[i].get_or_init(|| q))
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    /// Oscillator length `ℓ = (8 E_C / E_L)^{1/4}`: `φ_f - φ_ext = ℓ ξ`.
    pub fn oscillator_length(params: &CircuitParams<T>) -> T {
        (T::lit(8.0) * params.e_c / params.e_l).sqrt().sqrt()
    }

    fn junction_term(quad: &HermiteQuadrature<T>, junction: &JunctionModel<T>, length: T, phi_ext: T) -> DMatrix<T> {
        quad.operator_matrix(|xi| junction.junction_energy(phi_ext + length * xi))
    }

    /// Fluxonium Hamiltonian `4 E_C n^2 + V_J(φ) + E_L (φ - φ_ext)^2 / 2`.
    pub fn fluxonium_matrix(
        &self,
        junction: &JunctionModel<T>,
        params: &CircuitParams<T>,
        phi_ext: T,
    ) -> Result<DMatrix<T>> {
        junction.validate()?;
        if !(params.e_c > T::zero() && params.e_l > T::zero()) {
            return Err(Error::invalid("E_C and E_L must be > 0"));
        }
        if !phi_ext.is_finite_value() {
            return Err(Error::invalid("phi_ext is not finite"));
        }
        let length = Self::oscillator_length(params);
        let omega = params.plasma_frequency();
        let lc_scale = omega * (T::from_usize_lossy(self.basis.n_fluxonium) - T::lit(0.5));
        let mut h = self.verified_junction_term(junction, length, phi_ext, lc_scale)?;
        for k in 0..h.nrows() {
            h[(k, k)] += omega * (T::from_usize_lossy(k) + T::lit(0.5));
        }
        Ok(h)
    }

    /// Junction term on the base node count. When verifying, the node count
    /// is doubled until two successive tables agree to `QUADRATURE_TOL`
    /// relative, and the coarser of the agreeing pair is returned.
    fn verified_junction_term(
        &self,
        junction: &JunctionModel<T>,
        length: T,
        phi_ext: T,
        lc_scale: T,
    ) -> Result<DMatrix<T>> {
        let mut coarse = Self::junction_term(self.rung(0)?, junction, length, phi_ext);
        if self.ladder.len() == 1 {
            return Ok(coarse);
        }
        let tol = QUADRATURE_TOL.max(100.0 * T::EPSILON);
        let mut rel = f64::INFINITY;
        for i in 1..self.ladder.len() {
            let fine = Self::junction_term(self.rung(i)?, junction, length, phi_ext);
            let scale = fine.amax().max(lc_scale);
            rel = ((&coarse - &fine).amax() / scale).to_f64_lossy();
            if rel <= tol {
                return Ok(coarse);
            }
            coarse = fine;
        }
        Err(Error::numerical(format!(
            "junction quadrature not converged up to {} nodes: last doubling changed the matrix by {rel:.3e} relative",
            self.node_counts.last().copied().unwrap_or(0)
        )))
    }

    /// Coupled Hamiltonian in the product basis, resonator index major:
    /// row `n * n_fluxonium + k` is `|n⟩_r ⊗ |k⟩_f`.
    pub fn coupled_matrix(
        &self,
        junction: &JunctionModel<T>,
        params: &CircuitParams<T>,
        phi_ext: T,
    ) -> Result<DMatrix<T>> {
        let g = params.coupling_coefficient();
        self.coupled_matrix_with_coupling(junction, params, phi_ext, g)
    }

    /// As [`Self::coupled_matrix`] with an explicit coupling coefficient.
    pub fn coupled_matrix_with_coupling(
        &self,
        junction: &JunctionModel<T>,
        params: &CircuitParams<T>,
        phi_ext: T,
        g: T,
    ) -> Result<DMatrix<T>> {
        let nr = self.basis.n_resonator;
        if nr < 2 {
            return Err(Error::invalid("coupled matrix needs n_resonator >= 2"));
        }
        let nf = self.basis.n_fluxonium;
        let hf = self.fluxonium_matrix(junction, params, phi_ext)?;
        let res = params.resonator_energies()?;
        let omega_r = res.frequency();
        let len_r = (T::lit(8.0) * res.e_cr / res.e_lr).sqrt().sqrt();
        let len_f = Self::oscillator_length(params);
        let half_sqrt = T::lit(std::f64::consts::FRAC_1_SQRT_2);

        let dim = nr * nf;
        let mut h = DMatrix::<T>::zeros(dim, dim);
        for n in 0..nr {
            let off = n * nf;
            let e_n = omega_r * (T::from_usize_lossy(n) + T::lit(0.5));
            for i in 0..nf {
                for j in 0..nf {
                    h[(off + i, off + j)] = hf[(i, j)];
                }
                h[(off + i, off + i)] += e_n;
            }
        }
        // -g φ_r ⊗ φ_f; both position operators are tridiagonal
        for n in 0..nr - 1 {
            let xr = len_r * half_sqrt * T::from_usize_lossy(n + 1).sqrt();
            for k in 0..nf {
                let mut add = |fk: usize, v: T| {
                    let a = n * nf + k;
                    let b = (n + 1) * nf + fk;
                    h[(a, b)] -= g * xr * v;
                    h[(b, a)] -= g * xr * v;
                };
                if k + 1 < nf {
                    add(k + 1, len_f * half_sqrt * T::from_usize_lossy(k + 1).sqrt());
                }
                if k > 0 {
                    add(k - 1, len_f * half_sqrt * T::from_usize_lossy(k).sqrt());
                }
                if self.options.gauge == CouplingGauge::JunctionPhase {
                    add(k, phi_ext);
                }
            }
        }
        Ok(h)
    }
}

/// One-shot fluxonium matrix with default options.
pub fn build_fluxonium_matrix<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    basis: BasisSpec,
) -> Result<DMatrix<T>> {
    Hamiltonian::new(basis, BuildOptions::default())?.fluxonium_matrix(junction, params, phi_ext)
}

/// One-shot coupled matrix with default options.
pub fn build_coupled_matrix<T: Scalar>(
    junction: &JunctionModel<T>,
    params: &CircuitParams<T>,
    phi_ext: T,
    basis: BasisSpec,
) -> Result<DMatrix<T>> {
    Hamiltonian::new(basis, BuildOptions::default())?.coupled_matrix(junction, params, phi_ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitParams;
    use std::f64::consts::PI;

    /// `ln n!` for the closed-form displacement matrix elements.
    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    /// Generalized Laguerre `L_n^{(a)}(x)` by three-term recurrence.
    fn laguerre(n: usize, a: f64, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 + a - x);
        if n == 0 {
            return l0;
        }
        for k in 1..n {
            let kf = k as f64;
            let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    /// `⟨j| cos(φ_ext + ℓ ξ) |k⟩` in closed form: the real part of
    /// `e^{iφ_ext} ⟨j|D(iℓ/√2)|k⟩`.
    fn cos_element(j: usize, k: usize, length: f64, phi_ext: f64) -> f64 {
        let (m, n) = (j.max(k), j.min(k));
        let x = length * length / 2.0;
        let mag = (0.5 * (ln_factorial(n) - ln_factorial(m)) - x / 2.0).exp()
            * (x.sqrt()).powi((m - n) as i32)
            * laguerre(n, (m - n) as f64, x);
        // α = iℓ/√2, so α^{m-n} carries i^{m-n}; the element is symmetric in j, k
        let phase = phi_ext + (m - n) as f64 * PI / 2.0;
        mag * phase.cos()
    }

    #[test]
    fn junction_free_matrix_is_diagonal_plasma_ladder() {
        let p = CircuitParams::DEVICE_A;
        let h = build_fluxonium_matrix(&JunctionModel::sinusoidal(0.0), &p, 0.3, BasisSpec::uncoupled(20)).unwrap();
        let w = p.plasma_frequency();
        assert!((w - 3.628).abs() < 5e-4);
        for i in 0..20 {
            for j in 0..20 {
                let want = if i == j { w * (i as f64 + 0.5) } else { 0.0 };
                assert!((h[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_elements_match_closed_form() {
        let p = CircuitParams::DEVICE_A;
        let e_j = 6.7;
        let phi_ext = 0.37;
        let n = 40;
        let h = build_fluxonium_matrix(&JunctionModel::sinusoidal(e_j), &p, phi_ext, BasisSpec::uncoupled(n)).unwrap();
        let len = Hamiltonian::<f64>::oscillator_length(&p);
        let w = p.plasma_frequency();
        for j in 0..n {
            for k in 0..n {
                let lc = if j == k { w * (j as f64 + 0.5) } else { 0.0 };
                let want = lc - e_j * cos_element(j, k, len, phi_ext);
                assert!((h[(j, k)] - want).abs() < 1e-10, "({j},{k}) {} vs {want}", h[(j, k)]);
            }
        }
    }

    #[test]
    fn matrices_are_symmetric() {
        let p = CircuitParams::DEVICE_A;
        let j = JunctionModel::channels(26.0, vec![0.6, 0.2]);
        let h = build_coupled_matrix(&j, &p, 1.1, BasisSpec::coupled(20, 4)).unwrap();
        let scale = h.amax();
        assert!((&h - h.transpose()).amax() <= 1e-12 * scale);
    }

    #[test]
    fn coupled_needs_two_photon_states() {
        let p = CircuitParams::DEVICE_A;
        let err = build_coupled_matrix(&JunctionModel::sinusoidal(1.0), &p, 0.0, BasisSpec::uncoupled(20));
        assert!(err.is_err());
    }

    #[test]
    fn kinked_potential_fails_quadrature_check() {
        // |cos(φ/2)| has a kink at π that Gauss-Hermite cannot resolve to 1e-9
        let p = CircuitParams::DEVICE_A;
        let j = JunctionModel::channels(26.0, vec![1.0]);
        let err = build_fluxonium_matrix(&j, &p, PI, BasisSpec::uncoupled(20)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn small_basis_rejected() {
        let p = CircuitParams::DEVICE_A;
        assert!(build_fluxonium_matrix(&JunctionModel::sinusoidal(1.0), &p, 0.0, BasisSpec::uncoupled(5)).is_err());
    }
}
