use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::assign::ModelCurves;
use super::linewidth::lorentzian;
use super::peaks::Polarity;
use super::scan::Scan;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lineshape {
    #[serde(rename = "fwhm_GHz")]
    pub fwhm_ghz: f64,
    pub amplitude: f64,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub lineshape: Lineshape,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sigma: f64,
    #[serde(default)]
    pub baseline: f64,
    pub seed: u64,
}

/// Scan of Lorentzian lines along the model curves plus seeded Gaussian
/// noise. The generator settings and the true curve values on the scan's
/// x axis are stored under `metadata["generator"]`.
pub fn synthesize_scan(model: &ModelCurves, x_axis: &[f64], f_axis: &[f64], opts: &SynthOptions) -> Result<Scan> {
    let ls = opts.lineshape;
    if !(ls.fwhm_ghz > 0.0) || !ls.amplitude.is_finite() {
        return Err(Error::invalid("lineshape needs fwhm > 0 and a finite amplitude"));
    }
    if !(opts.noise_sigma >= 0.0) || !opts.baseline.is_finite() {
        return Err(Error::invalid("noise sigma must be >= 0 and the baseline finite"));
    }
    let sign = match ls.polarity {
        Polarity::Max => 1.0,
        Polarity::Min => -1.0,
    };
    let truth: Vec<Vec<Option<f64>>> =
        (0..model.curves.len()).map(|c| x_axis.iter().map(|&x| model.value_at(c, x)).collect()).collect();
    let mut amplitude: Vec<Vec<f64>> = (0..x_axis.len())
        .map(|i| {
            f_axis
                .iter()
                .map(|&f| {
                    let lines: f64 = truth
                        .iter()
                        .filter_map(|t| t[i])
                        .map(|f0| lorentzian(f, f0, ls.fwhm_ghz, sign * ls.amplitude, 0.0))
                        .sum();
                    opts.baseline + lines
                })
                .collect()
        })
        .collect();
    if opts.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let normal = Normal::new(0.0, opts.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        for col in &mut amplitude {
            for v in col.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let mut scan = Scan::new(x_axis.to_vec(), f_axis.to_vec(), amplitude)?;
    let truth_json: serde_json::Map<String, serde_json::Value> =
        model.curves.iter().zip(&truth).map(|((name, _), t)| (name.clone(), json!(t))).collect();
    scan.metadata.insert(
        "generator".into(),
        json!({
            "seed": opts.seed,
            "noise_sigma": opts.noise_sigma,
            "baseline": opts.baseline,
            "lineshape": ls,
            "truth_GHz": truth_json,
        }),
    );
    Ok(scan)
}
