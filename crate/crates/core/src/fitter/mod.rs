//! Simultaneous least-squares fit of many spectra with shared device
//! parameters, per-spectrum junction parameters and flux offsets, plus
//! seeding, synthetic markers and anomalous-phase extraction.

mod fit;
mod layout;
mod phi0;
mod problem;
mod seed;
mod synthetic;

pub use fit::{fit, FitConfig, FitResult, NamedWeakDirection, SpectrumFit, DEFAULT_RANK_THRESHOLD};
pub use layout::{FixedParams, JunctionLayout, Param, ParameterLayout, SharedParams, SpectrumLayout, SpectrumValues};
pub use phi0::{extract_phi0, extract_phi0_grouped, offset_points, wrap_phase, OffsetPoint, Phi0};
pub use problem::{Dataset, FitProblem, MarkerResidual, ResidualModel};
pub use seed::initial_guess;
pub use synthetic::{synthesize_markers, MarkerSampling};
