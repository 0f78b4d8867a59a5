use std::path::PathBuf;

use anyhow::{Context, Result};
use fluxfit::hamiltonian::BuildOptions;
use fluxfit::spectroscopy::{synthesize_scan, Lineshape, ModelCurves, Polarity, SynthOptions};
use fluxfit::{CircuitParams, JunctionModel, ModelKind, SpectrumSolver, Transition};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Flags, Global};
use crate::io::{absolute, linear_axis, model_curves_csv, phase_axis, read_model_curves};
use crate::manifest::{Run, Status};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Model curves CSV (as written by simulate or synth) instead of
    /// computing them from the circuit.
    #[arg(long)]
    model_curves: Option<PathBuf>,
    /// uncoupled or coupled.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    e_j: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    transitions: Option<Vec<String>>,
    #[arg(long, allow_negative_numbers = true)]
    phi_min_over_pi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi_max_over_pi: Option<f64>,
    #[arg(long)]
    phi_steps: Option<usize>,
    #[arg(long)]
    f_min_ghz: Option<f64>,
    #[arg(long)]
    f_max_ghz: Option<f64>,
    #[arg(long)]
    f_steps: Option<usize>,
    /// Lorentzian full width at half maximum, GHz.
    #[arg(long)]
    fwhm_ghz: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// max (peaks) or min (dips).
    #[arg(long)]
    polarity: Option<String>,
    /// Gaussian noise standard deviation, amplitude units.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    baseline: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub model_curves: Option<PathBuf>,
    pub circuit: CircuitParams,
    pub junction: JunctionModel,
    pub model: ModelKind,
    pub n_fluxonium: usize,
    pub n_resonator: usize,
    pub transitions: Vec<Transition>,
    pub phi_min_over_pi: f64,
    pub phi_max_over_pi: f64,
    pub phi_steps: usize,
    #[serde(rename = "f_min_GHz")]
    pub f_min_ghz: f64,
    #[serde(rename = "f_max_GHz")]
    pub f_max_ghz: f64,
    pub f_steps: usize,
    #[serde(rename = "fwhm_GHz")]
    pub fwhm_ghz: f64,
    pub amplitude: f64,
    pub polarity: Polarity,
    pub noise_sigma: f64,
    pub baseline: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            model_curves: None,
            circuit: CircuitParams::DEVICE_A,
            junction: JunctionModel::sinusoidal(3.8),
            model: ModelKind::Uncoupled,
            n_fluxonium: 60,
            n_resonator: 8,
            transitions: ["g0->e0", "g0->f0"].iter().map(|s| s.parse().expect("valid label")).collect(),
            phi_min_over_pi: 0.0,
            phi_max_over_pi: 2.0,
            phi_steps: 61,
            f_min_ghz: 1.0,
            f_max_ghz: 10.0,
            f_steps: 901,
            fwhm_ghz: 0.02,
            amplitude: 1.0,
            polarity: Polarity::Max,
            noise_sigma: 0.0,
            baseline: 0.0,
        }
    }
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let mut f = Flags::default();
    f.set("model_curves", args.model_curves.as_deref().map(absolute).transpose()?)
        .set("model", args.model.clone())
        .set("junction", args.e_j.map(JunctionModel::sinusoidal))
        .set("transitions", args.transitions.clone())
        .set("phi_min_over_pi", args.phi_min_over_pi)
        .set("phi_max_over_pi", args.phi_max_over_pi)
        .set("phi_steps", args.phi_steps)
        .set("f_min_GHz", args.f_min_ghz)
        .set("f_max_GHz", args.f_max_ghz)
        .set("f_steps", args.f_steps)
        .set("fwhm_GHz", args.fwhm_ghz)
        .set("amplitude", args.amplitude)
        .set("polarity", args.polarity.clone())
        .set("noise_sigma", args.noise_sigma)
        .set("baseline", args.baseline);
    let options: Options = resolve("synth", global.file.as_ref(), f.into_map())?;
    let inputs = options.model_curves.iter().cloned().collect();
    super::drive(global, "synth", &options, inputs, execute)
}

pub fn execute(o: &Options, run: &mut Run) -> Result<Status> {
    let curves = match &o.model_curves {
        Some(p) => read_model_curves(p)?,
        None => {
            let x = phase_axis(o.phi_min_over_pi, o.phi_max_over_pi, o.phi_steps)?;
            let levels = super::levels_for(o.model, &o.transitions, 0);
            let basis = super::basis(o.model, o.n_fluxonium, o.n_resonator);
            let solver = SpectrumSolver::<f64>::new(o.model, basis, BuildOptions::default())?.with_levels(levels);
            let sweep = solver.sweep(&o.junction, &o.circuit, &x)?;
            let named = sweep.frequencies_for(&o.transitions)?.into_iter().map(|(t, v)| (t.to_string(), v)).collect();
            ModelCurves::new(x, named)?
        }
    };
    let f = linear_axis(o.f_min_ghz, o.f_max_ghz, o.f_steps).context("frequency axis")?;
    let opts = SynthOptions {
        lineshape: Lineshape { fwhm_ghz: o.fwhm_ghz, amplitude: o.amplitude, polarity: o.polarity },
        noise_sigma: o.noise_sigma,
        baseline: o.baseline,
        seed: run.seed(),
    };
    let scan = synthesize_scan(&curves, &curves.x_axis, &f, &opts)?;
    run.write("scan.csv", scan.to_csv())?;
    run.write("model.csv", model_curves_csv(&curves))?;
    println!("synthesized {} x {} scan with {} transition(s)", scan.x_axis.len(), f.len(), curves.curves.len());
    Ok(Status::Success)
}
