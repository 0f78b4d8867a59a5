use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layout::ParameterLayout;
use super::problem::Dataset;
use crate::error::{Error, Result};
use crate::hamiltonian::{BasisSpec, BuildOptions, ModelKind, SpectrumSolver, Transition};
use crate::spectroscopy::{Marker, PeakSet, Polarity};

/// Marker sampling of a known parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSampling {
    pub transitions: Vec<Transition>,
    /// Nominal phases, shared by all spectra.
    pub x_axis: Vec<f64>,
    /// Standard deviation of the Gaussian frequency noise, GHz.
    pub noise_sigma_ghz: f64,
    pub seed: u64,
}

/// Labeled markers computed from `layout` at every `x` and transition,
/// plus seeded Gaussian noise. Datasets follow the layout's spectra; the
/// noise stream runs through them in order.
pub fn synthesize_markers(
    layout: &ParameterLayout,
    model: ModelKind,
    basis: BasisSpec,
    sampling: &MarkerSampling,
) -> Result<Vec<Dataset>> {
    if !(sampling.noise_sigma_ghz >= 0.0 && sampling.noise_sigma_ghz.is_finite()) {
        return Err(Error::invalid("noise sigma must be finite and >= 0"));
    }
    if sampling.transitions.is_empty() || sampling.x_axis.is_empty() {
        return Err(Error::invalid("need at least one transition and one phase"));
    }
    let levels = match model {
        ModelKind::Uncoupled => {
            sampling.transitions.iter().map(|t| t.initial.fluxonium.max(t.end.fluxonium) + 1).max().unwrap_or(2)
        }
        ModelKind::Coupled => crate::hamiltonian::DEFAULT_LEVELS,
    };
    let solver = SpectrumSolver::<f64>::new(model, basis, BuildOptions::default())?.with_levels(levels);
    let normal = Normal::new(0.0, sampling.noise_sigma_ghz).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut out = Vec::with_capacity(layout.spectra.len());
    for (i, s) in layout.spectra.iter().enumerate() {
        let v = layout.spectrum_values(i)?;
        let phases: Vec<f64> = sampling.x_axis.iter().map(|&x| v.model_phase(x)).collect();
        let sweep = solver.sweep(&v.junction, &v.params, &phases)?;
        let mut markers = Vec::with_capacity(phases.len() * sampling.transitions.len());
        for (p, &x) in sampling.x_axis.iter().enumerate() {
            let point = sweep.point(p);
            for &t in &sampling.transitions {
                let f = point.transition(t)?;
                let noise = if sampling.noise_sigma_ghz > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                markers.push(Marker {
                    x,
                    f_ghz: f + noise,
                    polarity: Polarity::Max,
                    height: 1.0,
                    label: t.to_string(),
                });
            }
        }
        out.push(Dataset::new(s.name.clone(), PeakSet { markers }));
    }
    Ok(out)
}
