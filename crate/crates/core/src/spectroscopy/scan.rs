use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::circuit::SpectrumConditions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    SingleTone,
    #[default]
    TwoTone,
}

/// Unit of the scan's x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    /// External phase, radians.
    #[default]
    PhiExt,
    /// Applied field B_x, µT.
    BxMicroTesla,
}

/// Gridded transmission magnitude over `(x, f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub x_axis: Vec<f64>,
    #[serde(default)]
    pub x_unit: XAxis,
    #[serde(rename = "f_axis_GHz")]
    pub f_axis: Vec<f64>,
    /// `amplitude[i][k]` at `(x_axis[i], f_axis[k])`.
    pub amplitude: Vec<Vec<f64>>,
    #[serde(default)]
    pub kind: ScanKind,
    #[serde(default)]
    pub conditions: SpectrumConditions,
    /// Generator or calibration records.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl Scan {
    pub fn new(x_axis: Vec<f64>, f_axis: Vec<f64>, amplitude: Vec<Vec<f64>>) -> Result<Self> {
        let scan = Scan {
            x_axis,
            x_unit: XAxis::PhiExt,
            f_axis,
            amplitude,
            kind: ScanKind::TwoTone,
            conditions: SpectrumConditions::default(),
            metadata: Default::default(),
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_axis.is_empty() || self.f_axis.is_empty() {
            return Err(Error::invalid("scan axes must be non-empty"));
        }
        if !strictly_ascending(&self.x_axis) {
            return Err(Error::invalid("x axis must be finite and strictly ascending"));
        }
        if !strictly_ascending(&self.f_axis) {
            return Err(Error::invalid("frequency axis must be finite and strictly ascending"));
        }
        if self.amplitude.len() != self.x_axis.len() {
            return Err(Error::invalid(format!(
                "amplitude has {} columns for {} x values",
                self.amplitude.len(),
                self.x_axis.len()
            )));
        }
        for (i, col) in self.amplitude.iter().enumerate() {
            if col.len() != self.f_axis.len() {
                return Err(Error::invalid(format!(
                    "amplitude column {i} has {} entries for {} frequencies",
                    col.len(),
                    self.f_axis.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("amplitude column {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Mean frequency step, GHz (0 for a single frequency).
    pub fn f_step(&self) -> f64 {
        let n = self.f_axis.len();
        if n < 2 {
            return 0.0;
        }
        (self.f_axis[n - 1] - self.f_axis[0]) / (n - 1) as f64
    }

    pub fn f_range(&self) -> f64 {
        self.f_axis[self.f_axis.len() - 1] - self.f_axis[0]
    }

    /// Long-format CSV `x,f_GHz,amplitude`, row-major by x.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,f_GHz,amplitude\n");
        for (x, col) in self.x_axis.iter().zip(&self.amplitude) {
            for (f, a) in self.f_axis.iter().zip(col) {
                let _ = writeln!(out, "{x},{f},{a}");
            }
        }
        out
    }

    /// Parses the long CSV format. Rows must be grouped by x (ascending)
    /// with the same ascending frequency list in every group.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut x_axis: Vec<f64> = Vec::new();
        let mut f_axis: Vec<f64> = Vec::new();
        let mut amplitude: Vec<Vec<f64>> = Vec::new();
        let mut header_seen = false;
        for (idx, line) in reader.lines().enumerate() {
            let row = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["x", "f_GHz", "amplitude"] {
                    return Err(Error::Parse { row, msg: format!("expected header x,f_GHz,amplitude, got {line:?}") });
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse { row, msg: format!("expected 3 fields, got {}", fields.len()) });
            }
            let mut vals = [0.0f64; 3];
            for (v, s) in vals.iter_mut().zip(&fields) {
                *v = s.parse().map_err(|_| Error::Parse { row, msg: format!("not a number: {s:?}") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { row, msg: format!("not finite: {s:?}") });
                }
            }
            let [x, f, a] = vals;
            if x_axis.last() != Some(&x) {
                if let Some(&last) = x_axis.last() {
                    if x <= last {
                        return Err(Error::Parse { row, msg: format!("x = {x} not ascending") });
                    }
                    if amplitude.last().map_or(0, Vec::len) != f_axis.len() {
                        return Err(Error::Parse { row, msg: format!("x = {last} has an incomplete frequency list") });
                    }
                }
                x_axis.push(x);
                amplitude.push(Vec::with_capacity(f_axis.len()));
            }
            let col = amplitude.last_mut().expect("pushed above");
            let k = col.len();
            if x_axis.len() == 1 {
                if f_axis.last().is_some_and(|&prev| f <= prev) {
                    return Err(Error::Parse { row, msg: format!("f_GHz = {f} not ascending") });
                }
                f_axis.push(f);
            } else if k >= f_axis.len() || f_axis[k] != f {
                return Err(Error::Parse { row, msg: format!("f_GHz = {f} does not match the frequency axis") });
            }
            col.push(a);
        }
        if !header_seen {
            return Err(Error::Parse { row: 1, msg: "empty scan file".into() });
        }
        if amplitude.last().map_or(0, Vec::len) != f_axis.len() {
            return Err(Error::Parse { row: 0, msg: "last x group has an incomplete frequency list".into() });
        }
        Scan::new(x_axis, f_axis, amplitude)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scan: Scan = serde_json::from_str(s)?;
        scan.validate()?;
        Ok(scan)
    }
}
