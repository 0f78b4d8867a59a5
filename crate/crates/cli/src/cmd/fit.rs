use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fluxfit::fitter::{fit, initial_guess, Dataset, FitConfig, FitProblem, FitResult, ParameterLayout};
use fluxfit::optim::OptimizerConfig;
use fluxfit::spectroscopy::PeakSet;
use fluxfit::{CircuitParams, ModelKind};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Flags, Global};
use crate::io::{absolute, read_text};
use crate::manifest::{Run, Status};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Labeled peak-set JSON files, one spectrum each.
    #[arg(required = true)]
    peaks: Vec<PathBuf>,
    /// Parameter layout JSON with starting values, bounds and frozen flags;
    /// seeded from the data and the design circuit when absent.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// uncoupled or coupled.
    #[arg(long)]
    model: Option<String>,
    /// Gate voltage of each spectrum (one value applies to all).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    v_j: Option<Vec<f64>>,
    /// Field B_z of each spectrum (one value applies to all).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    b_z: Option<Vec<f64>>,
    /// NAME or NAME=VALUE; matches full names (spectra[0].E_J), last
    /// components (E_J) or bases (T). Repeatable.
    #[arg(long)]
    freeze: Vec<String>,
    /// Skip the unfrozen comparison fit run when --freeze sets values.
    #[arg(long)]
    no_compare: bool,
    /// Extra perturbed starts.
    #[arg(long)]
    multistart: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    x_tol: Option<f64>,
    #[arg(long)]
    f_tol: Option<f64>,
    #[arg(long)]
    n_fluxonium: Option<usize>,
    #[arg(long)]
    n_resonator: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub peaks: Vec<PathBuf>,
    pub layout: Option<PathBuf>,
    /// Design values used for seeding.
    pub circuit: CircuitParams,
    pub model: ModelKind,
    pub v_j: Vec<f64>,
    pub b_z: Vec<f64>,
    pub freeze: Vec<String>,
    pub compare: bool,
    pub multistart: usize,
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub rank_threshold: f64,
    pub n_fluxonium: Option<usize>,
    pub n_resonator: Option<usize>,
}

impl Default for Options {
    fn default() -> Self {
        let fc = FitConfig::default();
        Self {
            peaks: Vec::new(),
            layout: None,
            circuit: CircuitParams::DEVICE_A,
            model: ModelKind::Uncoupled,
            v_j: Vec::new(),
            b_z: Vec::new(),
            freeze: Vec::new(),
            compare: true,
            multistart: fc.multistart,
            max_iter: fc.optimizer.max_iter,
            x_tol: fc.optimizer.x_tol,
            f_tol: fc.optimizer.f_tol,
            rank_threshold: fc.rank_threshold,
            n_fluxonium: None,
            n_resonator: None,
        }
    }
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let mut f = Flags::default();
    let peaks = args.peaks.iter().map(|p| absolute(p)).collect::<Result<Vec<_>>>()?;
    f.set("peaks", Some(peaks))
        .set("layout", args.layout.as_deref().map(absolute).transpose()?)
        .set("model", args.model.clone())
        .set("v_j", args.v_j.clone())
        .set("b_z", args.b_z.clone())
        .set("multistart", args.multistart)
        .set("max_iter", args.max_iter)
        .set("x_tol", args.x_tol)
        .set("f_tol", args.f_tol)
        .set("n_fluxonium", args.n_fluxonium)
        .set("n_resonator", args.n_resonator);
    if !args.freeze.is_empty() {
        f.set("freeze", Some(args.freeze.clone()));
    }
    if args.no_compare {
        f.set("compare", Some(false));
    }
    let options: Options = resolve("fit", global.file.as_ref(), f.into_map())?;
    super::drive(global, "fit", &options, inputs(&options), execute)
}

pub fn inputs(o: &Options) -> Vec<PathBuf> {
    o.peaks.iter().chain(&o.layout).cloned().collect()
}

/// `NAME` or `NAME=VALUE`.
fn parse_freeze(spec: &str) -> Result<(&str, Option<f64>)> {
    match spec.split_once('=') {
        None => Ok((spec.trim(), None)),
        Some((name, v)) => {
            let v: f64 = v.trim().parse().with_context(|| format!("--freeze {spec}: bad value"))?;
            Ok((name.trim(), Some(v)))
        }
    }
}

/// One value per spectrum from a list of length 0, 1 or `n`.
fn per_spectrum(name: &str, values: &[f64], n: usize) -> Result<Vec<Option<f64>>> {
    match values.len() {
        0 => Ok(vec![None; n]),
        1 => Ok(vec![Some(values[0]); n]),
        k if k == n => Ok(values.iter().map(|&v| Some(v)).collect()),
        k => bail!("{k} {name} values for {n} spectra"),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn execute(o: &Options, run: &mut Run) -> Result<Status> {
    if o.peaks.is_empty() {
        bail!("fit needs at least one peak set");
    }
    let mut datasets = Vec::with_capacity(o.peaks.len());
    for p in &o.peaks {
        let markers = PeakSet::from_json(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
        datasets.push(Dataset::new(dataset_name(p), markers));
    }
    let mut layout = match &o.layout {
        Some(p) => {
            let l: ParameterLayout =
                serde_json::from_str(&read_text(p)?).with_context(|| format!("parsing layout {}", p.display()))?;
            if l.spectra.len() != datasets.len() {
                bail!("layout has {} spectra for {} peak sets", l.spectra.len(), datasets.len());
            }
            l
        }
        None => initial_guess(&datasets, &o.circuit, o.model)?,
    };
    let v_j = per_spectrum("V_j", &o.v_j, datasets.len())?;
    let b_z = per_spectrum("B_z", &o.b_z, datasets.len())?;
    for ((s, v), b) in layout.spectra.iter_mut().zip(v_j).zip(b_z) {
        s.conditions.v_j = v.or(s.conditions.v_j);
        s.conditions.b_z = b.or(s.conditions.b_z);
    }
    let unfrozen = layout.clone();
    let mut valued = Vec::new();
    for spec in &o.freeze {
        let (name, value) = parse_freeze(spec)?;
        layout.freeze(name, value)?;
        if value.is_some() {
            valued.push(spec.clone());
        }
    }

    let config = FitConfig {
        optimizer: OptimizerConfig { max_iter: o.max_iter, x_tol: o.x_tol, f_tol: o.f_tol },
        multistart: o.multistart,
        seed: run.seed(),
        rank_threshold: o.rank_threshold,
    };
    let problem = |layout: ParameterLayout| {
        let mut p = FitProblem::new(datasets.clone(), layout, o.model);
        if let Some(nf) = o.n_fluxonium {
            p.basis = Some(super::basis(o.model, nf, o.n_resonator.unwrap_or(6)));
        }
        p
    };
    let result = fit(&problem(layout), &config)?;
    run.write("fit_result.json", result.to_json()?)?;
    run.write("fit_log.csv", result.log_csv())?;
    print!("{}", summary(&result));

    if o.compare && !valued.is_empty() {
        let free = fit(&problem(unfrozen), &config)?;
        run.write("fit_result_free.json", free.to_json()?)?;
        run.write("fit_log_free.csv", free.log_csv())?;
        let report = side_by_side(&free, &result, &valued.join(";"));
        run.write("freeze_report.csv", &report)?;
        print!("{report}");
    }
    Ok(if result.converged { Status::Success } else { Status::NotConverged })
}

fn summary(r: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "rms {:.3} MHz over {} markers, {} iterations, {}",
        1e3 * r.rms_residual_ghz,
        r.residuals.len(),
        r.iterations,
        if r.converged { "converged" } else { "NOT converged" }
    );
    for (name, value, frozen) in r.layout.named_values() {
        let _ = writeln!(out, "  {name} = {value}{}", if frozen { " (frozen)" } else { "" });
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// CSV with one row per quantity and one column per fit.
fn side_by_side(free: &FitResult, frozen: &FitResult, label: &str) -> String {
    let mut out = format!("quantity,free,{label}\n");
    let _ = writeln!(out, "rms_residual_GHz,{},{}", free.rms_residual_ghz, frozen.rms_residual_ghz);
    let _ = writeln!(out, "converged,{},{}", free.converged, frozen.converged);
    for ((name, a, _), (_, b, _)) in free.layout.named_values().into_iter().zip(frozen.layout.named_values()) {
        let _ = writeln!(out, "{name},{a},{b}");
    }
    out
}
