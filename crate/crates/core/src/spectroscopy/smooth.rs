use rayon::prelude::*;

use super::scan::Scan;
use crate::error::{Error, Result};

/// Default kernel width in frequency steps.
pub const DEFAULT_SIGMA_STEPS: f64 = 3.0;
/// Kernel truncation, in sigmas.
const TRUNCATE: f64 = 4.0;

/// Default smoothing sigma for `scan`, GHz.
pub fn default_sigma(scan: &Scan) -> f64 {
    DEFAULT_SIGMA_STEPS * scan.f_step()
}

/// Reflect index `i` into `0..n` (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Gaussian smoothing along the frequency axis only, reflective edges.
///
/// Sigma below half a frequency step returns the scan unchanged.
pub fn smooth_frequency_axis(scan: &Scan, sigma_ghz: f64) -> Result<Scan> {
    scan.validate()?;
    let range = scan.f_range();
    if !(sigma_ghz > 0.0 && sigma_ghz < range / 4.0) {
        return Err(Error::invalid(format!("smoothing sigma must lie in (0, {}) GHz, got {sigma_ghz}", range / 4.0)));
    }
    let step = scan.f_step();
    if sigma_ghz < 0.5 * step {
        return Ok(scan.clone());
    }
    let s = sigma_ghz / step;
    let half = (TRUNCATE * s).ceil() as isize;
    let raw: Vec<f64> = (-half..=half).map(|k| (-0.5 * (k as f64 / s).powi(2)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let kernel: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let n = scan.f_axis.len();

    let amplitude = scan
        .amplitude
        .par_iter()
        .map(|col| {
            (0..n)
                .map(|i| {
                    // written as a correction to the centre value so constants pass through exactly
                    let c = col[i];
                    let corr: f64 = kernel
                        .iter()
                        .enumerate()
                        .map(|(j, w)| w * (col[reflect(i as isize + j as isize - half, n)] - c))
                        .sum();
                    c + corr
                })
                .collect()
        })
        .collect();
    Ok(Scan { amplitude, ..scan.clone() })
}
