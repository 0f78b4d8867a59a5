use std::path::PathBuf;

use anyhow::{Context, Result};
use fluxfit::spectroscopy::{
    assign_markers, calibrate_flux_axis, default_sigma, find_extrema, smooth_frequency_axis, PolarityFilter, Scan,
    XAxis,
};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Flags, Global};
use crate::io::{absolute, read_model_curves};
use crate::manifest::{Run, Status};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scan CSV with header x,f_GHz,amplitude, rows grouped by x.
    scan: PathBuf,
    /// Gaussian smoothing sigma along frequency, GHz (default: 3 steps).
    #[arg(long)]
    smooth_sigma_ghz: Option<f64>,
    /// Skip smoothing.
    #[arg(long)]
    no_smooth: bool,
    /// Minimum prominence, amplitude units.
    #[arg(long)]
    min_height: Option<f64>,
    /// max, min or both.
    #[arg(long)]
    polarity: Option<String>,
    /// Model curves CSV used to label markers.
    #[arg(long)]
    model_curves: Option<PathBuf>,
    /// Assignment tolerance, GHz.
    #[arg(long)]
    tol_ghz: Option<f64>,
    /// Treat x as B_x in µT and convert with this field period.
    #[arg(long)]
    flux_period_ut: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    flux_offset_ut: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub scan: Option<PathBuf>,
    pub smooth: bool,
    #[serde(rename = "smooth_sigma_GHz")]
    pub smooth_sigma_ghz: Option<f64>,
    pub min_height: f64,
    pub polarity: PolarityFilter,
    pub model_curves: Option<PathBuf>,
    #[serde(rename = "tol_GHz")]
    pub tol_ghz: f64,
    #[serde(rename = "flux_period_uT")]
    pub flux_period_ut: Option<f64>,
    #[serde(rename = "flux_offset_uT")]
    pub flux_offset_ut: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            scan: None,
            smooth: true,
            smooth_sigma_ghz: None,
            min_height: 0.3,
            polarity: PolarityFilter::Both,
            model_curves: None,
            tol_ghz: 0.03,
            flux_period_ut: None,
            flux_offset_ut: 0.0,
        }
    }
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let mut f = Flags::default();
    f.set("scan", Some(absolute(&args.scan)?))
        .set("smooth_sigma_GHz", args.smooth_sigma_ghz)
        .set("min_height", args.min_height)
        .set("polarity", args.polarity.clone())
        .set("model_curves", args.model_curves.as_deref().map(absolute).transpose()?)
        .set("tol_GHz", args.tol_ghz)
        .set("flux_period_uT", args.flux_period_ut)
        .set("flux_offset_uT", args.flux_offset_ut);
    if args.no_smooth {
        f.set("smooth", Some(false));
    }
    let options: Options = resolve("peaks", global.file.as_ref(), f.into_map())?;
    super::drive(global, "peaks", &options, inputs(&options), execute)
}

pub fn inputs(o: &Options) -> Vec<PathBuf> {
    o.scan.iter().chain(&o.model_curves).cloned().collect()
}

pub fn execute(o: &Options, run: &mut Run) -> Result<Status> {
    let path = o.scan.as_ref().context("no scan file given")?;
    let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut scan =
        Scan::from_csv(std::io::BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(period) = o.flux_period_ut {
        scan.x_unit = XAxis::BxMicroTesla;
        scan = calibrate_flux_axis(&scan, period, o.flux_offset_ut)?;
    }
    let reduced = if o.smooth {
        let sigma = o.smooth_sigma_ghz.unwrap_or_else(|| default_sigma(&scan));
        smooth_frequency_axis(&scan, sigma)?
    } else {
        scan
    };
    let mut peaks = find_extrema(&reduced, o.min_height, o.polarity)?;
    if let Some(m) = &o.model_curves {
        peaks = assign_markers(&peaks, &read_model_curves(m)?, o.tol_ghz)?;
    }
    run.write("peaks.json", peaks.to_json()?)?;
    run.write("peaks.csv", peaks.to_csv())?;
    let assigned = peaks.markers.iter().filter(|m| m.is_assigned()).count();
    println!("{} markers, {assigned} assigned", peaks.len());
    Ok(Status::Success)
}
