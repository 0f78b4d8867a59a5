//! Truncated matrix representations of the fluxonium and the coupled
//! fluxonium-resonator circuit, their diagonalization, state labeling and
//! transition frequencies versus external phase.
//!
//! The fluxonium is represented in the eigenbasis of its `(E_C, E_L)` LC mode
//! centred at `φ_ext`; the junction term is injected by Gauss-Hermite
//! quadrature. The resonator uses its own Fock basis. An independent
//! finite-difference solver on a phase grid lives in [`phase_grid`] and is
//! used to check the oscillator-basis route.

mod converge;
mod eigen;
mod labels;
mod matrix;
pub mod phase_grid;
pub mod quadrature;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use converge::{converge_basis, DEFAULT_CONVERGENCE_TOL};
pub use eigen::{eigensolve, Eigen};
pub use labels::{label_states, LevelLabel, StateLabel, Transition, MIXED_OVERLAP};
pub use matrix::{build_coupled_matrix, build_fluxonium_matrix, Hamiltonian};
pub use phase_grid::{phase_grid_oracle, PhaseGrid};
pub use spectrum::{PointSpectrum, SpectrumResult, SpectrumSolver, DEFAULT_LEVELS};

/// Default cap on the product dimension of the basis.
pub const DEFAULT_MAX_DIM: usize = 4000;

/// Sizes of the truncated basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub n_fluxonium: usize,
    pub n_resonator: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { n_fluxonium: 60, n_resonator: 8, max_dim: DEFAULT_MAX_DIM }
    }
}

impl BasisSpec {
    pub fn uncoupled(n_fluxonium: usize) -> Self {
        Self { n_fluxonium, n_resonator: 1, max_dim: DEFAULT_MAX_DIM }
    }

    pub fn coupled(n_fluxonium: usize, n_resonator: usize) -> Self {
        Self { n_fluxonium, n_resonator, max_dim: DEFAULT_MAX_DIM }
    }

    pub fn dim(&self) -> usize {
        self.n_fluxonium * self.n_resonator
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fluxonium < 10 {
            return Err(Error::invalid(format!("n_fluxonium must be >= 10, got {}", self.n_fluxonium)));
        }
        if self.n_resonator < 1 {
            return Err(Error::invalid("n_resonator must be >= 1"));
        }
        if self.dim() > self.max_dim {
            return Err(Error::invalid(format!("basis dimension {} exceeds cap {}", self.dim(), self.max_dim)));
        }
        Ok(())
    }

    /// Gauss-Hermite node count used for the junction term.
    pub fn default_nodes(&self) -> usize {
        2 * self.n_fluxonium + 32
    }
}

/// Which circuit the spectrum is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Uncoupled,
    Coupled,
}

/// Phase coordinate multiplying `φ_r` in the coupling term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingGauge {
    /// `-g φ_r (φ_f - φ_ext)`: the coupling follows the current through the
    /// superinductance, so spectra are exactly `2π`-periodic in `φ_ext`.
    #[default]
    InductorCurrent,
    /// `-g φ_r φ_f`, literally.
    JunctionPhase,
}

/// Options for matrix construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Rebuild the junction term with twice the nodes and fail if any entry
    /// moves by more than `1e-9` relative to the matrix scale.
    pub verify_quadrature: bool,
    /// Override for the Gauss-Hermite node count.
    pub nodes: Option<usize>,
    pub gauge: CouplingGauge,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { verify_quadrature: true, nodes: None, gauge: CouplingGauge::default() }
    }
}

/// Relative tolerance of the quadrature doubling check.
pub const QUADRATURE_TOL: f64 = 1e-9;
