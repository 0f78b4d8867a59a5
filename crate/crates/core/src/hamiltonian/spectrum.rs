use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::eigen::eigensolve;
use super::labels::{label_states, LevelLabel, StateLabel, Transition};
use super::matrix::Hamiltonian;
use super::{BasisSpec, BuildOptions, ModelKind};
use crate::circuit::{CircuitParams, JunctionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default number of levels kept and labeled per phase point.
pub const DEFAULT_LEVELS: usize = 24;

/// Spectrum at a single external phase.
#[derive(Debug, Clone)]
pub struct PointSpectrum<T> {
    pub phi_ext: T,
    /// Ascending raw eigenvalues, GHz.
    pub energies: Vec<T>,
    pub labels: Vec<LevelLabel>,
}

impl<T: Scalar> PointSpectrum<T> {
    pub fn energy_of(&self, label: StateLabel) -> Option<T> {
        self.labels.iter().position(|l| l.label == label).map(|i| self.energies[i])
    }

    /// `|E_end - E_initial|`, GHz.
    pub fn transition(&self, t: Transition) -> Result<T> {
        let find = |s: StateLabel| {
            self.energy_of(s).ok_or_else(|| {
                Error::Labeling(format!(
                    "state {s} not among the labeled levels at phi_ext = {}",
                    self.phi_ext.to_f64_lossy()
                ))
            })
        };
        Ok((find(t.end)? - find(t.initial)?).abs())
    }
}

/// Eigenvalues, labels and requested transitions along a `φ_ext` sweep.
#[derive(Debug, Clone)]
pub struct SpectrumResult<T> {
    pub phi_ext_axis: Vec<T>,
    /// `eigenvalues[p][l]`, raw, ascending in `l`.
    pub eigenvalues: Vec<Vec<T>>,
    pub labels: Vec<Vec<LevelLabel>>,
    /// Requested transitions in request order.
    pub transitions: Vec<(Transition, Vec<T>)>,
}

/// Computes spectra for one basis and circuit model.
#[derive(Debug, Clone)]
pub struct SpectrumSolver<T> {
    hamiltonian: Hamiltonian<T>,
    model: ModelKind,
    levels: usize,
}

impl<T: Scalar> SpectrumSolver<T> {
    pub fn new(model: ModelKind, basis: BasisSpec, options: BuildOptions) -> Result<Self> {
        if model == ModelKind::Coupled && basis.n_resonator < 2 {
            return Err(Error::invalid("coupled model needs n_resonator >= 2"));
        }
        let basis = if model == ModelKind::Uncoupled { BasisSpec { n_resonator: 1, ..basis } } else { basis };
        let hamiltonian = Hamiltonian::new(basis, options)?;
        let levels = DEFAULT_LEVELS.min(basis.dim());
        Ok(Self { hamiltonian, model, levels })
    }

    pub fn uncoupled(n_fluxonium: usize) -> Result<Self> {
        Self::new(ModelKind::Uncoupled, BasisSpec::uncoupled(n_fluxonium), BuildOptions::default())
    }

    pub fn coupled(n_fluxonium: usize, n_resonator: usize) -> Result<Self> {
        Self::new(ModelKind::Coupled, BasisSpec::coupled(n_fluxonium, n_resonator), BuildOptions::default())
    }

    /// Number of lowest levels kept and labeled.
    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels.clamp(1, self.hamiltonian.basis().dim());
        self
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn hamiltonian(&self) -> &Hamiltonian<T> {
        &self.hamiltonian
    }

    pub fn solve_point(
        &self,
        junction: &JunctionModel<T>,
        params: &CircuitParams<T>,
        phi_ext: T,
    ) -> Result<PointSpectrum<T>> {
        let hf = self.hamiltonian.fluxonium_matrix(junction, params, phi_ext)?;
        let flux = eigensolve(hf)?;
        match self.model {
            ModelKind::Uncoupled => {
                let n = self.levels.min(flux.values.len());
                Ok(PointSpectrum {
                    phi_ext,
                    energies: flux.values.iter().take(n).copied().collect(),
                    labels: (0..n)
                        .map(|m| LevelLabel { label: StateLabel::new(m, 0), overlap: 1.0, mixed: false })
                        .collect(),
                })
            }
            ModelKind::Coupled => {
                let h = self.hamiltonian.coupled_matrix(junction, params, phi_ext)?;
                let coupled = eigensolve(h)?;
                let omega_r = params.resonator_energies()?.frequency();
                let resonator: Vec<T> = (0..self.hamiltonian.basis().n_resonator)
                    .map(|n| omega_r * (T::from_usize_lossy(n) + T::lit(0.5)))
                    .collect();
                let n = self.levels;
                let values = DVector::from_iterator(n, coupled.values.iter().take(n).copied());
                let labels = label_states(&values, &coupled.vectors, &flux.values, &flux.vectors, &resonator)?;
                Ok(PointSpectrum { phi_ext, energies: values.iter().copied().collect(), labels })
            }
        }
    }

    /// Solves every phase point of `axis` (in parallel).
    pub fn sweep(
        &self,
        junction: &JunctionModel<T>,
        params: &CircuitParams<T>,
        axis: &[T],
    ) -> Result<SpectrumResult<T>> {
        let points: Vec<PointSpectrum<T>> =
            axis.par_iter().map(|&phi| self.solve_point(junction, params, phi)).collect::<Result<_>>()?;
        let mut eigenvalues = Vec::with_capacity(points.len());
        let mut labels = Vec::with_capacity(points.len());
        for p in points {
            eigenvalues.push(p.energies);
            labels.push(p.labels);
        }
        Ok(SpectrumResult { phi_ext_axis: axis.to_vec(), eigenvalues, labels, transitions: Vec::new() })
    }
}

impl<T: Scalar> SpectrumResult<T> {
    pub fn point(&self, index: usize) -> PointSpectrum<T> {
        PointSpectrum {
            phi_ext: self.phi_ext_axis[index],
            energies: self.eigenvalues[index].clone(),
            labels: self.labels[index].clone(),
        }
    }

    /// `f(initial -> final)` along the axis for each requested final state.
    pub fn transition_frequencies(
        &self,
        initial: StateLabel,
        finals: &[StateLabel],
    ) -> Result<Vec<(Transition, Vec<T>)>> {
        let transitions: Vec<Transition> = finals.iter().map(|&f| Transition::new(initial, f)).collect();
        self.frequencies_for(&transitions)
    }

    pub fn frequencies_for(&self, transitions: &[Transition]) -> Result<Vec<(Transition, Vec<T>)>> {
        transitions
            .iter()
            .map(|&t| {
                let freqs = (0..self.phi_ext_axis.len())
                    .map(|p| {
                        self.point(p).transition(t).map_err(|_| {
                            Error::Labeling(format!(
                                "transition {t}: label missing at point {p} (phi_ext = {})",
                                self.phi_ext_axis[p].to_f64_lossy()
                            ))
                        })
                    })
                    .collect::<Result<Vec<T>>>()?;
                Ok((t, freqs))
            })
            .collect()
    }

    /// Stores the requested transitions on the result (request order kept).
    pub fn with_transitions(mut self, transitions: &[Transition]) -> Result<Self> {
        self.transitions = self.frequencies_for(transitions)?;
        Ok(self)
    }

    /// Eigenvalues relative to the ground state at each point.
    pub fn relative_levels(&self) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|row| {
                let g = row[0].to_f64_lossy();
                row.iter().map(|e| e.to_f64_lossy() - g).collect()
            })
            .collect()
    }

    /// CSV: `phi_ext_over_pi` then one GHz column per stored transition.
    pub fn transitions_csv(&self) -> String {
        let mut out = String::from("phi_ext_over_pi");
        for (t, _) in &self.transitions {
            out.push(',');
            out.push_str(&t.to_string());
        }
        out.push('\n');
        for (p, phi) in self.phi_ext_axis.iter().enumerate() {
            out.push_str(&fmt_float(phi.to_f64_lossy() / std::f64::consts::PI));
            for (_, f) in &self.transitions {
                out.push(',');
                out.push_str(&fmt_float(f[p].to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }

    /// CSV of the lowest `count` levels relative to the ground state.
    pub fn levels_csv(&self, count: usize) -> String {
        let rel = self.relative_levels();
        let count = count.min(rel.first().map_or(0, |r| r.len()));
        let mut out = String::from("phi_ext_over_pi");
        for l in 0..count {
            out.push_str(&format!(",{}", self.labels[0][l].label));
        }
        out.push('\n');
        for (p, phi) in self.phi_ext_axis.iter().enumerate() {
            out.push_str(&fmt_float(phi.to_f64_lossy() / std::f64::consts::PI));
            for e in rel[p].iter().take(count) {
                out.push(',');
                out.push_str(&fmt_float(*e));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Export<'a> {
            phi_ext: Vec<f64>,
            eigenvalues_rel_ground: Vec<Vec<f64>>,
            labels: &'a [Vec<LevelLabel>],
            transitions: Vec<(String, Vec<f64>)>,
        }
        let e = Export {
            phi_ext: self.phi_ext_axis.iter().map(|p| p.to_f64_lossy()).collect(),
            eigenvalues_rel_ground: self.relative_levels(),
            labels: &self.labels,
            transitions: self
                .transitions
                .iter()
                .map(|(t, f)| (t.to_string(), f.iter().map(|v| v.to_f64_lossy()).collect()))
                .collect(),
        };
        serde_json::to_value(e).expect("spectrum export serializes")
    }
}

/// Shortest representation that round-trips exactly.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x}")
}
