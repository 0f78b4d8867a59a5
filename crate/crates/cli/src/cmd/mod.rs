pub mod fit;
pub mod peaks;
pub mod phi0;
pub mod replay;
pub mod simulate;
pub mod synth;

use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use crate::config::Global;
use crate::manifest::{Run, Status};

/// Runs `exec` with a manifest recording `options`, `inputs` and every
/// output written through the [`Run`].
pub fn drive<T: Serialize>(
    global: &Global,
    command: &str,
    options: &T,
    inputs: Vec<PathBuf>,
    exec: impl FnOnce(&T, &mut Run) -> Result<Status>,
) -> Result<Status> {
    let mut run = Run::start(global, command, options, &inputs)?;
    let result = exec(options, &mut run);
    run.finish(result)
}

/// Basis for `model`; the resonator size only matters for the coupled one.
pub fn basis(model: fluxfit::ModelKind, n_fluxonium: usize, n_resonator: usize) -> fluxfit::BasisSpec {
    match model {
        fluxfit::ModelKind::Uncoupled => fluxfit::BasisSpec::uncoupled(n_fluxonium),
        fluxfit::ModelKind::Coupled => fluxfit::BasisSpec::coupled(n_fluxonium, n_resonator),
    }
}

/// Number of levels to keep so every transition in `t` can be labeled.
pub fn levels_for(model: fluxfit::ModelKind, t: &[fluxfit::Transition], at_least: usize) -> usize {
    let needed = match model {
        fluxfit::ModelKind::Uncoupled => {
            t.iter().map(|t| t.initial.fluxonium.max(t.end.fluxonium) + 1).max().unwrap_or(2)
        }
        fluxfit::ModelKind::Coupled => fluxfit::hamiltonian::DEFAULT_LEVELS,
    };
    needed.max(at_least).max(2)
}
