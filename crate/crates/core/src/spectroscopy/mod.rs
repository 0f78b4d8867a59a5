//! Two-tone spectroscopy scans: smoothing, extremum extraction, transition
//! assignment, linewidths and synthetic test data.

mod assign;
mod linewidth;
mod peaks;
mod scan;
mod smooth;
mod synth;

use std::f64::consts::PI;

use serde_json::json;

pub use assign::{assign_markers, ModelCurves, TIE_GHZ};
pub use linewidth::{extract_linewidth, lorentzian, LinewidthOptions, LinewidthSample, DEFAULT_WINDOW};
pub use peaks::{find_extrema, Marker, PeakSet, Polarity, PolarityFilter, UNASSIGNED};
pub use scan::{Scan, ScanKind, XAxis};
pub use smooth::{default_sigma, smooth_frequency_axis, DEFAULT_SIGMA_STEPS};
pub use synth::{synthesize_scan, Lineshape, SynthOptions};

use crate::error::{Error, Result};

/// Field period of one flux quantum through the loop for the reference
/// gradiometer, µT.
pub const DEFAULT_FLUX_PERIOD_UT: f64 = 550.0;

/// Converts a `B_x` axis (µT) to external phase, `2π (B_x - offset) / period`.
pub fn calibrate_flux_axis(scan: &Scan, period_ut: f64, offset_ut: f64) -> Result<Scan> {
    if !(period_ut > 0.0 && period_ut.is_finite()) || !offset_ut.is_finite() {
        return Err(Error::invalid(format!(
            "flux period must be finite and > 0 and the offset finite, got {period_ut}, {offset_ut}"
        )));
    }
    if scan.x_unit != XAxis::BxMicroTesla {
        return Err(Error::invalid("flux calibration needs a scan with a B_x axis"));
    }
    let mut out = scan.clone();
    out.x_axis = scan.x_axis.iter().map(|b| 2.0 * PI * (b - offset_ut) / period_ut).collect();
    out.x_unit = XAxis::PhiExt;
    out.metadata.insert("flux_calibration".into(), json!({"period_uT": period_ut, "offset_uT": offset_ut}));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_maps_period_to_2pi() {
        let mut scan = Scan::new(vec![100.0, 375.0, 650.0], vec![4.0, 5.0], vec![vec![0.0; 2]; 3]).unwrap();
        scan.x_unit = XAxis::BxMicroTesla;
        let out = calibrate_flux_axis(&scan, 550.0, 100.0).unwrap();
        assert_eq!(out.x_axis[0], 0.0);
        assert!((out.x_axis[1] - PI).abs() < 1e-15);
        assert!((out.x_axis[2] - 2.0 * PI).abs() < 1e-15);
        assert_eq!(out.x_unit, XAxis::PhiExt);
        assert_eq!(out.metadata["flux_calibration"]["period_uT"], 550.0);
    }

    #[test]
    fn calibration_rejects_phase_axis_and_bad_period() {
        let mut scan = Scan::new(vec![0.0], vec![4.0], vec![vec![0.0]]).unwrap();
        assert!(calibrate_flux_axis(&scan, 550.0, 0.0).is_err());
        scan.x_unit = XAxis::BxMicroTesla;
        assert!(calibrate_flux_axis(&scan, 0.0, 0.0).is_err());
    }
}
