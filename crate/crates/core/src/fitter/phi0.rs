use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use crate::error::{Error, Result};

/// Maps a phase to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil()
}

/// Fitted offset of one spectrum of a gate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetPoint {
    #[serde(rename = "V_j")]
    pub v_j: f64,
    #[serde(rename = "B_z", default, skip_serializing_if = "Option::is_none")]
    pub b_z: Option<f64>,
    pub phi_offset: f64,
}

/// Anomalous phase of one spectrum relative to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi0 {
    #[serde(rename = "V_j")]
    pub v_j: f64,
    #[serde(rename = "B_z", default, skip_serializing_if = "Option::is_none")]
    pub b_z: Option<f64>,
    /// Radians, in `(-π, π]`.
    pub phi0: f64,
    /// Radians, continuous along the sweep away from the reference.
    pub phi0_unwrapped: f64,
}

/// Offset points of a fit result, one per spectrum. Every spectrum needs a
/// `V_j` condition and the fit must have converged.
pub fn offset_points(result: &FitResult) -> Result<Vec<OffsetPoint>> {
    if !result.converged {
        return Err(Error::Config("phi0 extraction needs converged fits".into()));
    }
    result
        .spectra
        .iter()
        .map(|s| {
            let v_j =
                s.conditions.v_j.ok_or_else(|| Error::Config(format!("spectrum {:?} has no V_j condition", s.name)))?;
            Ok(OffsetPoint { v_j, b_z: s.conditions.b_z, phi_offset: s.phi_offset })
        })
        .collect()
}

fn same_voltage(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// `φ0(V_j) = φ_offset(V_j) - φ_offset(reference)` for a sweep at one field,
/// sorted by `V_j`. The unwrapped column removes jumps larger than `π`
/// walking outward from the reference.
pub fn extract_phi0(points: &[OffsetPoint], reference_v_j: f64) -> Result<Vec<Phi0>> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.v_j.total_cmp(&b.v_j));
    let r = sorted
        .iter()
        .position(|p| same_voltage(p.v_j, reference_v_j))
        .ok_or_else(|| Error::invalid(format!("reference V_j = {reference_v_j} not in the sweep")))?;
    let reference = sorted[r].phi_offset;
    let wrapped: Vec<f64> = sorted
        .iter()
        .enumerate()
        .map(|(i, p)| if i == r { 0.0 } else { wrap_phase(p.phi_offset - reference) })
        .collect();
    let mut unwrapped = wrapped.clone();
    for i in r + 1..sorted.len() {
        unwrapped[i] = unwrapped[i - 1] + wrap_phase(wrapped[i] - wrapped[i - 1]);
    }
    for i in (0..r).rev() {
        unwrapped[i] = unwrapped[i + 1] + wrap_phase(wrapped[i] - wrapped[i + 1]);
    }
    Ok(sorted
        .iter()
        .zip(wrapped.iter().zip(&unwrapped))
        .map(|(p, (&w, &u))| Phi0 { v_j: p.v_j, b_z: p.b_z, phi0: w, phi0_unwrapped: u })
        .collect())
}

/// [`extract_phi0`] per distinct `B_z`, groups ordered by field. Every
/// group must contain the reference voltage.
pub fn extract_phi0_grouped(points: &[OffsetPoint], reference_v_j: f64) -> Result<Vec<Phi0>> {
    let mut fields: Vec<Option<f64>> = Vec::new();
    for p in points {
        if !fields.iter().any(|f| f.map(f64::to_bits) == p.b_z.map(f64::to_bits)) {
            fields.push(p.b_z);
        }
    }
    fields.sort_by(|a, b| a.unwrap_or(f64::NEG_INFINITY).total_cmp(&b.unwrap_or(f64::NEG_INFINITY)));
    let mut out = Vec::with_capacity(points.len());
    for f in fields {
        let group: Vec<OffsetPoint> =
            points.iter().filter(|p| p.b_z.map(f64::to_bits) == f.map(f64::to_bits)).copied().collect();
        out.extend(extract_phi0(&group, reference_v_j)?);
    }
    Ok(out)
}
