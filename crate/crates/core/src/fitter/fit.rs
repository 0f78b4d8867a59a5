use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layout::ParameterLayout;
use super::phi0::wrap_phase;
use super::problem::{FitProblem, MarkerResidual};
use crate::circuit::{JunctionModel, SpectrumConditions};
use crate::error::{Error, Result};
use crate::hamiltonian::ModelKind;
use crate::optim::{
    column_independence, least_squares, weak_directions, IterationRecord, OptimizerConfig, Termination,
};

/// Default cut on the column-scaled Jacobian: directions with a relative
/// singular value, and parameters with a column independence, below it are
/// reported as unidentifiable.
pub const DEFAULT_RANK_THRESHOLD: f64 = 0.1;
/// Components smaller than this are left out of a weak-direction warning.
const WEAK_COMPONENT: f64 = 0.2;
/// Relative spread of multistart perturbations.
const MULTISTART_SPREAD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub optimizer: OptimizerConfig,
    /// Extra starts from perturbed seeds; 0 runs the seed only.
    pub multistart: usize,
    pub seed: u64,
    pub rank_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { optimizer: OptimizerConfig::default(), multistart: 0, seed: 0, rank_threshold: DEFAULT_RANK_THRESHOLD }
    }
}

/// A near-null direction of the scaled Jacobian in named coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedWeakDirection {
    pub relative_singular_value: f64,
    pub components: Vec<(String, f64)>,
}

impl NamedWeakDirection {
    /// Parameters with a sizable component, largest first.
    pub fn involved(&self) -> Vec<&str> {
        let mut c: Vec<&(String, f64)> = self.components.iter().filter(|c| c.1.abs() >= WEAK_COMPONENT).collect();
        c.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        c.into_iter().map(|c| c.0.as_str()).collect()
    }
}

/// Fitted values of one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub name: String,
    pub conditions: SpectrumConditions,
    pub junction: JunctionModel,
    /// `E_J` for a sinusoidal junction, `Δ Σ T_i / 4` for channels.
    #[serde(rename = "E_J_eff_GHz")]
    pub e_j_eff: f64,
    /// Fitted offset, radians, as carried by the optimizer.
    pub phi_offset: f64,
    pub flux_period_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub layout: ParameterLayout,
    pub free_parameters: Vec<String>,
    #[serde(rename = "rms_residual_GHz")]
    pub rms_residual_ghz: f64,
    /// `Σ r_i^2`, GHz².
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Index of the start that produced this result (0 is the seed).
    pub start: usize,
    pub spectra: Vec<SpectrumFit>,
    pub residuals: Vec<MarkerResidual>,
    pub weak_directions: Vec<NamedWeakDirection>,
    /// Parameters whose Jacobian column is nearly spanned by the others,
    /// with its independence (sine of the angle to that span).
    pub poorly_constrained: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    pub log: Vec<IterationRecord>,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Iteration log as CSV `iter,objective,trust_radius,step_norm`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iter,objective,trust_radius,step_norm\n");
        for r in &self.log {
            let _ = writeln!(out, "{},{},{},{}", r.iter, r.objective, r.trust_radius, r.step_norm);
        }
        out
    }

    /// Wrapped offset of spectrum `i`, radians in `(-π, π]`.
    pub fn wrapped_offset(&self, i: usize) -> f64 {
        wrap_phase(self.spectra[i].phi_offset)
    }
}

fn perturbed_start(x0: &[f64], lower: &[f64], upper: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    x0.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| {
            let u: f64 = rng.random_range(-MULTISTART_SPREAD..=MULTISTART_SPREAD);
            // Zero seeds (typically offsets) get an absolute kick.
            let scale = if v == 0.0 { 1.0 } else { v.abs() };
            (v + u * scale).clamp(lo, hi)
        })
        .collect()
}

/// Simultaneous bounded least-squares fit of all datasets.
///
/// The seed start always runs; `multistart` extra starts are drawn
/// uniformly within ±20 % of the seed values from `config.seed`, and the
/// lowest objective wins (ties go to the earlier start).
pub fn fit(problem: &FitProblem, config: &FitConfig) -> Result<FitResult> {
    config.optimizer.validate()?;
    if !(config.rank_threshold > 0.0 && config.rank_threshold < 1.0) {
        return Err(Error::Config(format!("rank threshold must be in (0, 1), got {}", config.rank_threshold)));
    }
    let model = problem.residual_model()?;
    let names = problem.layout.free_names();
    if model.len() < names.len() + 3 {
        return Err(Error::Config(format!(
            "{} assigned markers for {} free parameters; need at least {}",
            model.len(),
            names.len(),
            names.len() + 3
        )));
    }
    let x0 = problem.layout.free_values();
    let (lower, upper) = model.bounds();
    let mut starts = vec![x0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.multistart {
        starts.push(perturbed_start(&x0, lower, upper, &mut rng));
    }
    let mut best: Option<(usize, crate::optim::LeastSquaresReport)> = None;
    for (k, start) in starts.iter().enumerate() {
        let report = match least_squares(|x: &[f64]| model.residuals(x), start, lower, upper, &config.optimizer) {
            Ok(r) => r,
            // A perturbed start may land where the model cannot be solved.
            Err(e) if k > 0 => {
                log::warn!("start {k} failed: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        log::info!("start {k}: objective {:e} after {} iterations", report.objective, report.iterations);
        if best.as_ref().is_none_or(|(_, b)| report.objective < b.objective) {
            best = Some((k, report));
        }
    }
    let (start, report) = best.expect("the seed start always reports");

    let layout = problem.layout.with_free_values(&report.x)?;
    let residuals = model.marker_residuals(&report.x)?;
    let n = residuals.len().max(1) as f64;
    let rms = (report.objective / n).sqrt();

    let mut spectra = Vec::with_capacity(layout.spectra.len());
    for (i, s) in layout.spectra.iter().enumerate() {
        let v = layout.spectrum_values(i)?;
        let e_j_eff = v.junction.effective_ej()?;
        spectra.push(SpectrumFit {
            name: s.name.clone(),
            conditions: s.conditions.clone(),
            junction: v.junction,
            e_j_eff,
            phi_offset: v.phi_offset,
            flux_period_scale: v.flux_period_scale,
        });
    }

    let mut warnings = Vec::new();
    if !report.converged() {
        warnings.push(format!("no convergence within {} iterations; best point returned", config.optimizer.max_iter));
    }
    let weak: Vec<NamedWeakDirection> = weak_directions(&report.jacobian, config.rank_threshold)
        .into_iter()
        .map(|w| NamedWeakDirection {
            relative_singular_value: w.relative_singular_value,
            components: names.iter().cloned().zip(w.components).collect(),
        })
        .collect();
    for w in &weak {
        warnings.push(format!(
            "near-degenerate parameter combination (relative singular value {:.2e}): {}",
            w.relative_singular_value,
            w.involved().join(", ")
        ));
    }
    let poorly_constrained: Vec<(String, f64)> = names
        .iter()
        .zip(column_independence(&report.jacobian))
        .filter(|(_, s)| *s < config.rank_threshold)
        .map(|(n, s)| (n.clone(), s))
        .collect();
    if !poorly_constrained.is_empty() {
        let list: Vec<String> = poorly_constrained.iter().map(|(n, s)| format!("{n} ({s:.2e})")).collect();
        warnings.push(format!("parameters not separable by the data: {}", list.join(", ")));
    }
    for (i, d) in problem.datasets.iter().enumerate() {
        let unassigned = d.markers.len() - d.assigned_count();
        if unassigned > 0 {
            log::debug!("dataset {i}: {unassigned} unassigned markers excluded");
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(FitResult {
        model: problem.model,
        layout,
        free_parameters: names,
        rms_residual_ghz: rms,
        objective: report.objective,
        iterations: report.iterations,
        converged: report.converged(),
        termination: report.termination,
        start,
        spectra,
        residuals,
        weak_directions: weak,
        poorly_constrained,
        warnings,
        log: report.log,
    })
}
