use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::Result;
use fluxfit::hamiltonian::BuildOptions;
use fluxfit::{potential_eval, CircuitParams, JunctionModel, ModelKind, SpectrumSolver, Transition};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Flags, Global};
use crate::io::phase_axis;
use crate::manifest::{Run, Status};

const POTENTIAL_POINTS: usize = 241;
const POTENTIAL_HALF_SPAN_OVER_PI: f64 = 3.0;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Sinusoidal E_J values, GHz; one set of output files per value.
    #[arg(long, value_delimiter = ',')]
    e_j: Option<Vec<f64>>,
    /// uncoupled or coupled.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n_fluxonium: Option<usize>,
    #[arg(long)]
    n_resonator: Option<usize>,
    /// Comma-separated transitions such as g0->e0,g0->g1.
    #[arg(long, value_delimiter = ',')]
    transitions: Option<Vec<String>>,
    #[arg(long, allow_negative_numbers = true)]
    phi_min_over_pi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi_max_over_pi: Option<f64>,
    /// Number of phi_ext points; 1 gives the single point phi_min.
    #[arg(long)]
    phi_steps: Option<usize>,
    /// Also write V(phi) at every phi_ext of the sweep.
    #[arg(long)]
    potential: bool,
    /// Also write the lowest N levels relative to the ground state.
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub circuit: CircuitParams,
    pub junction: JunctionModel,
    /// When non-empty, replaces `junction` by one sinusoidal junction per value.
    pub e_j: Vec<f64>,
    pub model: ModelKind,
    pub n_fluxonium: usize,
    pub n_resonator: usize,
    pub transitions: Vec<Transition>,
    pub phi_min_over_pi: f64,
    pub phi_max_over_pi: f64,
    pub phi_steps: usize,
    pub potential: bool,
    pub levels: Option<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            circuit: CircuitParams::DEVICE_A,
            junction: JunctionModel::sinusoidal(3.8),
            e_j: Vec::new(),
            model: ModelKind::Uncoupled,
            n_fluxonium: 60,
            n_resonator: 8,
            transitions: ["g0->e0", "g0->f0", "g0->h0"].iter().map(|s| s.parse().expect("valid label")).collect(),
            phi_min_over_pi: 0.0,
            phi_max_over_pi: 1.0,
            phi_steps: 101,
            potential: false,
            levels: None,
        }
    }
}

impl Options {
    fn junctions(&self) -> Vec<JunctionModel> {
        if self.e_j.is_empty() {
            vec![self.junction.clone()]
        } else {
            self.e_j.iter().map(|&e| JunctionModel::sinusoidal(e)).collect()
        }
    }
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let mut f = Flags::default();
    f.set("e_j", args.e_j.clone())
        .set("model", args.model.clone())
        .set("n_fluxonium", args.n_fluxonium)
        .set("n_resonator", args.n_resonator)
        .set("transitions", args.transitions.clone())
        .set("phi_min_over_pi", args.phi_min_over_pi)
        .set("phi_max_over_pi", args.phi_max_over_pi)
        .set("phi_steps", args.phi_steps)
        .set("levels", args.levels)
        .switch("potential", args.potential);
    let options: Options = resolve("simulate", global.file.as_ref(), f.into_map())?;
    super::drive(global, "simulate", &options, Vec::new(), execute)
}

pub fn execute(o: &Options, run: &mut Run) -> Result<Status> {
    let phases = phase_axis(o.phi_min_over_pi, o.phi_max_over_pi, o.phi_steps)?;
    if o.transitions.is_empty() && o.levels.is_none() && !o.potential {
        anyhow::bail!("nothing to compute: give transitions, --levels or --potential");
    }
    let levels = super::levels_for(o.model, &o.transitions, o.levels.unwrap_or(0));
    let solver = SpectrumSolver::<f64>::new(
        o.model,
        super::basis(o.model, o.n_fluxonium, o.n_resonator),
        BuildOptions::default(),
    )?
    .with_levels(levels);
    let junctions = o.junctions();
    for (k, j) in junctions.iter().enumerate() {
        let suffix = if junctions.len() == 1 { String::new() } else { format!("_{k}") };
        let sweep = solver.sweep(j, &o.circuit, &phases)?.with_transitions(&o.transitions)?;
        if !o.transitions.is_empty() {
            run.write(&format!("transitions{suffix}.csv"), sweep.transitions_csv())?;
        }
        if let Some(n) = o.levels {
            run.write(&format!("levels{suffix}.csv"), sweep.levels_csv(n))?;
        }
        if o.potential {
            run.write(&format!("potential{suffix}.csv"), potential_csv(j, o.circuit.e_l, &phases)?)?;
        }
    }
    println!("simulated {} junction(s) at {} phases", junctions.len(), phases.len());
    Ok(Status::Success)
}

fn potential_csv(j: &JunctionModel, e_l: f64, phases: &[f64]) -> Result<String> {
    let mut out = String::from("phi_ext_over_pi,phi_over_pi,V_GHz\n");
    let step = 2.0 * POTENTIAL_HALF_SPAN_OVER_PI / (POTENTIAL_POINTS - 1) as f64;
    for &phi_ext in phases {
        for i in 0..POTENTIAL_POINTS {
            let phi_over_pi = -POTENTIAL_HALF_SPAN_OVER_PI + step * i as f64;
            let v = potential_eval(j, e_l, phi_over_pi * PI, phi_ext)?;
            writeln!(out, "{},{},{}", phi_ext / PI, phi_over_pi, v)?;
        }
    }
    Ok(out)
}
