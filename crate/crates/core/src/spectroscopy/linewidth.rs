use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::scan::Scan;
use crate::error::{Error, Result};
use crate::optim::{least_squares, OptimizerConfig};

/// Default flux window, radians of `φ_ext`.
pub const DEFAULT_WINDOW: f64 = 0.05 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthOptions {
    /// Full width of the x window centred on the requested point.
    pub window_width: f64,
    /// Fit only `|f - f_guess| <= fit_half_range_ghz`; whole axis when `None`.
    pub fit_half_range_ghz: Option<f64>,
}

impl Default for LinewidthOptions {
    fn default() -> Self {
        Self { window_width: DEFAULT_WINDOW, fit_half_range_ghz: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthSample {
    pub x_window: [f64; 2],
    #[serde(rename = "center_GHz")]
    pub center_ghz: f64,
    #[serde(rename = "fwhm_MHz")]
    pub fwhm_mhz: f64,
    /// RMS of the Lorentzian fit residuals, amplitude units.
    pub fit_residual: f64,
}

/// `offset + amplitude γ^2 / ((f - f0)^2 + γ^2)` with `γ = fwhm / 2`.
pub fn lorentzian(f: f64, center: f64, fwhm: f64, amplitude: f64, offset: f64) -> f64 {
    let g = 0.5 * fwhm;
    offset + amplitude * g * g / ((f - center).powi(2) + g * g)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Averages the columns within `options.window_width` of `x_center` and
/// fits a Lorentzian around the transition frequency.
///
/// `curve` holds the model transition frequency for every x column of the
/// scan; its mean over the window centres the fit range.
pub fn extract_linewidth(
    scan: &Scan,
    curve: &[f64],
    x_center: f64,
    options: &LinewidthOptions,
) -> Result<LinewidthSample> {
    scan.validate()?;
    if curve.len() != scan.x_axis.len() {
        return Err(Error::invalid(format!(
            "transition curve has {} points for {} x columns",
            curve.len(),
            scan.x_axis.len()
        )));
    }
    if !(options.window_width > 0.0) {
        return Err(Error::invalid("linewidth window width must be > 0"));
    }
    let half = 0.5 * options.window_width;
    let cols: Vec<usize> =
        (0..scan.x_axis.len()).filter(|&i| (scan.x_axis[i] - x_center).abs() <= half * (1.0 + 1e-12)).collect();
    if cols.len() < 3 {
        return Err(Error::invalid(format!(
            "linewidth window [{}, {}] holds {} x columns, need >= 3",
            x_center - half,
            x_center + half,
            cols.len()
        )));
    }
    let nf = scan.f_axis.len();
    let mut avg = vec![0.0; nf];
    for &i in &cols {
        for (a, v) in avg.iter_mut().zip(&scan.amplitude[i]) {
            *a += v;
        }
    }
    for a in &mut avg {
        *a /= cols.len() as f64;
    }
    let guess_f = cols.iter().map(|&i| curve[i]).sum::<f64>() / cols.len() as f64;
    let range: Vec<usize> = match options.fit_half_range_ghz {
        Some(r) => (0..nf).filter(|&k| (scan.f_axis[k] - guess_f).abs() <= r).collect(),
        None => (0..nf).collect(),
    };
    if range.len() < 8 {
        return Err(Error::UnreliableFit(format!("only {} frequency points in the fit range", range.len())));
    }
    let f: Vec<f64> = range.iter().map(|&k| scan.f_axis[k]).collect();
    let y: Vec<f64> = range.iter().map(|&k| avg[k]).collect();
    let step = scan.f_step();

    let base = median(&y);
    let (peak, _) =
        y.iter()
            .enumerate()
            .map(|(k, v)| (k, (v - base).abs()))
            .fold((0, -1.0), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc });
    let amp0 = y[peak] - base;
    let above = y.iter().filter(|v| ((*v - base) / amp0) >= 0.5).count();
    let fwhm0 = (above as f64 * step).max(2.0 * step);
    let (f_lo, f_hi) = (f[0], f[f.len() - 1]);
    let span = f_hi - f_lo;

    let residual = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(f.iter().zip(&y).map(|(&fk, &yk)| lorentzian(fk, p[0], p[1], p[2], p[3]) - yk).collect())
    };
    let x0 = [f[peak], fwhm0.min(span), amp0, base];
    let scale = amp0.abs().max(y.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(1e-300);
    let lower = [f_lo, 1e-6 * step, -10.0 * scale - 1.0, -10.0 * scale - 1.0];
    let upper = [f_hi, span, 10.0 * scale + 1.0, 10.0 * scale + 1.0];
    let cfg = OptimizerConfig { max_iter: 200, x_tol: 1e-12, f_tol: 1e-15 };
    let rep = least_squares(residual, &x0, &lower, &upper, &cfg)?;
    if !rep.converged() {
        return Err(Error::UnreliableFit(format!("Lorentzian fit stopped after {} iterations", rep.iterations)));
    }
    let fwhm = rep.x[1];
    if fwhm < 2.0 * step {
        return Err(Error::UnreliableFit(format!(
            "FWHM {:.3} MHz is below two frequency steps ({:.3} MHz)",
            fwhm * 1e3,
            2.0 * step * 1e3
        )));
    }
    let rms = (rep.objective / y.len() as f64).sqrt();
    let x_lo = cols.iter().map(|&i| scan.x_axis[i]).fold(f64::INFINITY, f64::min);
    let x_hi = cols.iter().map(|&i| scan.x_axis[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok(LinewidthSample { x_window: [x_lo, x_hi], center_ghz: rep.x[0], fwhm_mhz: fwhm * 1e3, fit_residual: rms })
}
