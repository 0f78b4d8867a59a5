use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layout::{ParameterLayout, SpectrumValues};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    BasisSpec, BuildOptions, ModelKind, PointSpectrum, SpectrumSolver, Transition, DEFAULT_LEVELS,
};
use crate::spectroscopy::PeakSet;

/// Assigned markers of one spectrum; `x` is the nominal external phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(default)]
    pub name: String,
    pub markers: PeakSet,
    /// One weight per marker, default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, markers: PeakSet) -> Self {
        Self { name: name.into(), markers, weights: None }
    }

    pub fn assigned_count(&self) -> usize {
        self.markers.markers.iter().filter(|m| m.is_assigned()).count()
    }
}

fn default_true() -> bool {
    true
}

/// Datasets, one per layout spectrum, and the model they are fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub datasets: Vec<Dataset>,
    pub layout: ParameterLayout,
    #[serde(default)]
    pub model: ModelKind,
    /// Defaults to 50 fluxonium states uncoupled, 40 x 6 coupled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    /// Levels kept per phase point; by default just enough for the labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default = "default_true")]
    pub verify_quadrature: bool,
}

/// One marker's contribution to the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerResidual {
    pub dataset: usize,
    /// Index into the dataset's marker list.
    pub marker: usize,
    pub x: f64,
    pub transition: Transition,
    #[serde(rename = "f_GHz")]
    pub f_ghz: f64,
    #[serde(rename = "model_GHz")]
    pub model_ghz: f64,
    pub weight: f64,
    /// `weight * (f - model)`, GHz.
    #[serde(rename = "residual_GHz")]
    pub residual_ghz: f64,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    dataset: usize,
    marker: usize,
    x: f64,
    f: f64,
    weight: f64,
    transition: Transition,
}

/// Prepared residual function of a [`FitProblem`]: the solver is built once
/// and reused for every parameter vector.
#[derive(Debug, Clone)]
pub struct ResidualModel {
    layout: ParameterLayout,
    solver: SpectrumSolver<f64>,
    entries: Vec<Entry>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FitProblem {
    pub fn new(datasets: Vec<Dataset>, layout: ParameterLayout, model: ModelKind) -> Self {
        Self { datasets, layout, model, basis: None, levels: None, verify_quadrature: true }
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis.unwrap_or(match self.model {
            ModelKind::Uncoupled => BasisSpec::uncoupled(50),
            ModelKind::Coupled => BasisSpec::coupled(40, 6),
        })
    }

    pub fn marker_count(&self) -> usize {
        self.datasets.iter().map(Dataset::assigned_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.datasets.len() != self.layout.spectra.len() {
            return Err(Error::Config(format!(
                "{} datasets for {} layout spectra",
                self.datasets.len(),
                self.layout.spectra.len()
            )));
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if let Some(w) = &d.weights {
                if w.len() != d.markers.len() {
                    return Err(Error::Config(format!(
                        "dataset {i} has {} weights for {} markers",
                        w.len(),
                        d.markers.len()
                    )));
                }
                if w.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::Config(format!("dataset {i} has a negative or non-finite weight")));
                }
            }
            for (k, m) in d.markers.markers.iter().enumerate() {
                if !(m.x.is_finite() && m.f_ghz.is_finite()) {
                    return Err(Error::Config(format!("dataset {i} marker {k} is not finite")));
                }
            }
        }
        Ok(())
    }

    fn entries(&self) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        for (i, d) in self.datasets.iter().enumerate() {
            for (k, m) in d.markers.markers.iter().enumerate() {
                if !m.is_assigned() {
                    continue;
                }
                let transition: Transition = m
                    .label
                    .parse()
                    .map_err(|_| Error::Config(format!("dataset {i} marker {k}: unknown transition {:?}", m.label)))?;
                let weight = d.weights.as_ref().map_or(1.0, |w| w[k]);
                out.push(Entry { dataset: i, marker: k, x: m.x, f: m.f_ghz, weight, transition });
            }
        }
        Ok(out)
    }

    /// Builds the reusable residual function.
    pub fn residual_model(&self) -> Result<ResidualModel> {
        self.validate()?;
        let entries = self.entries()?;
        let levels = match (self.levels, self.model) {
            (Some(l), _) => l,
            (None, ModelKind::Uncoupled) => entries
                .iter()
                .map(|e| e.transition.initial.fluxonium.max(e.transition.end.fluxonium) + 1)
                .max()
                .unwrap_or(2),
            (None, ModelKind::Coupled) => DEFAULT_LEVELS,
        };
        let options = BuildOptions { verify_quadrature: self.verify_quadrature, ..BuildOptions::default() };
        let solver = SpectrumSolver::new(self.model, self.basis(), options)?.with_levels(levels);
        let (lower, upper) = self.layout.free_bounds();
        Ok(ResidualModel { layout: self.layout.clone(), solver, entries, lower, upper })
    }

    /// Weighted residuals `w (f_marker - f_model)` of the assigned markers
    /// at the free-parameter vector `free`.
    pub fn residuals(&self, free: &[f64]) -> Result<Vec<f64>> {
        self.residual_model()?.residuals(free)
    }
}

impl ResidualModel {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// Model frequency of every assigned marker, memoized per spectrum and
    /// model phase; distinct points are solved in parallel.
    pub fn model_frequencies(&self, free: &[f64]) -> Result<Vec<f64>> {
        for (j, &v) in free.iter().enumerate() {
            if !(self.lower[j] <= v && v <= self.upper[j]) {
                return Err(Error::invalid(format!(
                    "parameter {j} = {v} outside [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        let layout = self.layout.with_free_values(free)?;
        let values: Vec<SpectrumValues> =
            (0..layout.spectra.len()).map(|i| layout.spectrum_values(i)).collect::<Result<_>>()?;
        let mut index: HashMap<(usize, u64), usize> = HashMap::new();
        let mut points: Vec<(usize, f64)> = Vec::new();
        let slots: Vec<usize> = self
            .entries
            .iter()
            .map(|e| {
                let phi = values[e.dataset].model_phase(e.x);
                *index.entry((e.dataset, phi.to_bits())).or_insert_with(|| {
                    points.push((e.dataset, phi));
                    points.len() - 1
                })
            })
            .collect();
        let spectra: Vec<PointSpectrum<f64>> = points
            .par_iter()
            .map(|&(d, phi)| self.solver.solve_point(&values[d].junction, &values[d].params, phi))
            .collect::<Result<_>>()?;
        self.entries
            .iter()
            .zip(&slots)
            .map(|(e, &s)| {
                spectra[s].transition(e.transition).map_err(|err| match err {
                    Error::Labeling(msg) => Error::Config(format!("transition {} not available: {msg}", e.transition)),
                    other => other,
                })
            })
            .collect()
    }

    pub fn residuals(&self, free: &[f64]) -> Result<Vec<f64>> {
        let model = self.model_frequencies(free)?;
        Ok(self.entries.iter().zip(&model).map(|(e, m)| e.weight * (e.f - m)).collect())
    }

    /// Per-marker breakdown at `free`.
    pub fn marker_residuals(&self, free: &[f64]) -> Result<Vec<MarkerResidual>> {
        let model = self.model_frequencies(free)?;
        Ok(self
            .entries
            .iter()
            .zip(&model)
            .map(|(e, &m)| MarkerResidual {
                dataset: e.dataset,
                marker: e.marker,
                x: e.x,
                transition: e.transition,
                f_ghz: e.f,
                model_ghz: m,
                weight: e.weight,
                residual_ghz: e.weight * (e.f - m),
            })
            .collect())
    }
}
