use std::f64::consts::PI;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fluxfit::spectroscopy::ModelCurves;

pub fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

pub fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

pub fn phase_axis(min_over_pi: f64, max_over_pi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        bail!("phi steps must be >= 1");
    }
    if !(min_over_pi.is_finite() && max_over_pi.is_finite()) || (steps > 1 && max_over_pi <= min_over_pi) {
        bail!("phi range [{min_over_pi}, {max_over_pi}]·π must be finite and ascending");
    }
    if steps == 1 {
        return Ok(vec![min_over_pi * PI]);
    }
    let step = (max_over_pi - min_over_pi) / (steps - 1) as f64;
    Ok((0..steps).map(|i| (min_over_pi + step * i as f64) * PI).collect())
}

pub fn linear_axis(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
        bail!("axis [{lo}, {hi}] with {steps} steps must be finite, ascending and have >= 2 points");
    }
    let step = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps).map(|i| lo + step * i as f64).collect())
}

/// Model curves CSV: first column `x` (radians) or `phi_ext_over_pi`, then
/// one GHz column per transition. Empty or `nan` cells mark undefined
/// points.
pub fn read_model_curves(path: &Path) -> Result<ModelCurves> {
    let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model_curves(std::io::BufReader::new(file))
        .with_context(|| format!("parsing model curves {}", path.display()))
}

pub fn parse_model_curves<R: BufRead>(reader: R) -> Result<ModelCurves> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| {
        l.as_ref().map_or(true, |l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
    });
    let (_, header) = lines.next().context("empty model curves file")?;
    let header = header?;
    let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let scale = match cols.first().map(String::as_str) {
        Some("x") => 1.0,
        Some("phi_ext_over_pi") => PI,
        _ => bail!("row 1: first column must be x or phi_ext_over_pi"),
    };
    if cols.len() < 2 {
        bail!("row 1: no transition columns");
    }
    let mut x = Vec::new();
    let mut curves: Vec<Vec<f64>> = vec![Vec::new(); cols.len() - 1];
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            bail!("row {row}: expected {} fields, got {}", cols.len(), fields.len());
        }
        let xv: f64 = fields[0].parse().with_context(|| format!("row {row}: bad x {:?}", fields[0]))?;
        x.push(xv * scale);
        for (c, s) in curves.iter_mut().zip(&fields[1..]) {
            let v = if s.is_empty() {
                f64::NAN
            } else {
                s.parse().with_context(|| format!("row {row}: bad value {s:?}"))?
            };
            c.push(v);
        }
    }
    Ok(ModelCurves::new(x, cols[1..].iter().cloned().zip(curves).collect())?)
}

pub fn model_curves_csv(m: &ModelCurves) -> String {
    let mut out = String::from("x");
    for (name, _) in &m.curves {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, x) in m.x_axis.iter().enumerate() {
        out.push_str(&x.to_string());
        for (_, v) in &m.curves {
            out.push(',');
            if v[i].is_finite() {
                out.push_str(&v[i].to_string());
            }
        }
        out.push('\n');
    }
    out
}
