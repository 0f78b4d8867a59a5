use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::Scan;
use crate::error::{Error, Result};

/// Label of markers not associated with any transition.
pub const UNASSIGNED: &str = "unassigned";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Max,
    Min,
}

/// Which extrema [`find_extrema`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityFilter {
    Max,
    Min,
    #[default]
    Both,
}

impl PolarityFilter {
    fn accepts(self, p: Polarity) -> bool {
        match self {
            PolarityFilter::Both => true,
            PolarityFilter::Max => p == Polarity::Max,
            PolarityFilter::Min => p == Polarity::Min,
        }
    }
}

impl std::str::FromStr for PolarityFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PolarityFilter::Max),
            "min" => Ok(PolarityFilter::Min),
            "both" => Ok(PolarityFilter::Both),
            _ => Err(Error::invalid(format!("polarity must be max, min or both, got {s:?}"))),
        }
    }
}

/// A `(x, f)` point of extremal response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub x: f64,
    #[serde(rename = "f_GHz")]
    pub f_ghz: f64,
    pub polarity: Polarity,
    /// Prominence in amplitude units.
    pub height: f64,
    #[serde(default = "unassigned")]
    pub label: String,
}

fn unassigned() -> String {
    UNASSIGNED.to_string()
}

impl Marker {
    pub fn is_assigned(&self) -> bool {
        self.label != UNASSIGNED
    }
}

/// Markers of one scan, ordered by x then frequency. Serializes as a bare
/// JSON array.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeakSet {
    pub markers: Vec<Marker>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV `x,f_GHz,polarity,height,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,f_GHz,polarity,height,label\n");
        for m in &self.markers {
            let pol = match m.polarity {
                Polarity::Max => "max",
                Polarity::Min => "min",
            };
            out.push_str(&format!("{},{},{},{},{}\n", m.x, m.f_ghz, pol, m.height, m.label));
        }
        out
    }
}

/// Indices of local maxima of `v`; a flat top reports its middle sample.
/// End points are never maxima.
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        if v[i - 1] < v[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && v[ahead] == v[i] {
                ahead += 1;
            }
            if v[ahead] < v[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Topographic prominence of the maximum at `peak`.
fn prominence(v: &[f64], peak: usize) -> f64 {
    let h = v[peak];
    let mut left_min = h;
    for &x in v[..peak].iter().rev() {
        if x > h {
            break;
        }
        left_min = left_min.min(x);
    }
    let mut right_min = h;
    for &x in &v[peak + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

/// Sub-step position of the maximum at `i` from a parabola through the
/// three neighbouring samples; stays within half a step.
fn refine(f: &[f64], v: &[f64], i: usize) -> f64 {
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return f[i];
    }
    let t = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    if t >= 0.0 {
        f[i] + t * (f[i + 1] - f[i])
    } else {
        f[i] + t * (f[i] - f[i - 1])
    }
}

fn column_extrema(f: &[f64], col: &[f64], polarity: Polarity, min_height: f64) -> Vec<(f64, f64)> {
    let v: Vec<f64> = match polarity {
        Polarity::Max => col.to_vec(),
        Polarity::Min => col.iter().map(|x| -x).collect(),
    };
    local_maxima(&v)
        .into_iter()
        .filter_map(|i| {
            let p = prominence(&v, i);
            (p >= min_height).then(|| (refine(f, &v, i), p))
        })
        .collect()
}

/// Local extrema along frequency in every x column whose prominence is at
/// least `min_height`. The marker height is the prominence.
pub fn find_extrema(scan: &Scan, min_height: f64, polarity: PolarityFilter) -> Result<PeakSet> {
    if !(min_height > 0.0 && min_height.is_finite()) {
        return Err(Error::invalid(format!("min_height must be finite and > 0, got {min_height}")));
    }
    scan.validate()?;
    let per_column: Vec<Vec<Marker>> = scan
        .x_axis
        .par_iter()
        .zip(&scan.amplitude)
        .map(|(&x, col)| {
            let mut found = Vec::new();
            for pol in [Polarity::Max, Polarity::Min] {
                if !polarity.accepts(pol) {
                    continue;
                }
                for (f, height) in column_extrema(&scan.f_axis, col, pol, min_height) {
                    found.push(Marker { x, f_ghz: f, polarity: pol, height, label: unassigned() });
                }
            }
            found.sort_by(|a, b| a.f_ghz.total_cmp(&b.f_ghz));
            found
        })
        .collect();
    Ok(PeakSet { markers: per_column.into_iter().flatten().collect() })
}
