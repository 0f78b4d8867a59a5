use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fluxfit::fitter::{extract_phi0_grouped, offset_points, FitResult};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Flags, Global};
use crate::io::{absolute, read_text};
use crate::manifest::{Run, Status};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory of fit result JSON files.
    dir: PathBuf,
    /// Gate voltage whose offset defines phi0 = 0.
    #[arg(long, allow_negative_numbers = true)]
    reference: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub dir: Option<PathBuf>,
    #[serde(rename = "reference_V_j")]
    pub reference_v_j: f64,
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let mut f = Flags::default();
    f.set("dir", Some(absolute(&args.dir)?)).set("reference_V_j", args.reference);
    let options: Options = resolve("phi0", global.file.as_ref(), f.into_map())?;
    let inputs = inputs(&options)?;
    super::drive(global, "phi0", &options, inputs, execute)
}

/// JSON files of the directory in name order, manifests excluded.
pub fn inputs(o: &Options) -> Result<Vec<PathBuf>> {
    let dir = o.dir.as_ref().context("no result directory given")?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    files.sort();
    Ok(files)
}

fn load(path: &Path) -> Result<Option<FitResult>> {
    match FitResult::from_json(&read_text(path)?) {
        Ok(r) => Ok(Some(r)),
        Err(e) => {
            log::warn!("skipping {}: not a fit result ({e})", path.display());
            Ok(None)
        }
    }
}

pub fn execute(o: &Options, run: &mut Run) -> Result<Status> {
    let mut points = Vec::new();
    let mut used = 0;
    for path in inputs(o)? {
        if let Some(r) = load(&path)? {
            points.extend(offset_points(&r).with_context(|| format!("{}", path.display()))?);
            used += 1;
        }
    }
    if used == 0 {
        bail!("no fit results in {}", o.dir.as_ref().map_or(String::new(), |d| d.display().to_string()));
    }
    let table = extract_phi0_grouped(&points, o.reference_v_j)?;
    let mut out = String::from("V_j,B_z,phi0_over_pi,phi0_unwrapped_over_pi\n");
    for row in &table {
        let b_z = row.b_z.map_or(String::new(), |b| b.to_string());
        writeln!(out, "{},{},{},{}", row.v_j, b_z, row.phi0 / PI, row.phi0_unwrapped / PI)?;
    }
    run.write("phi0.csv", &out)?;
    print!("{out}");
    Ok(Status::Success)
}
