use super::peaks::{PeakSet, UNASSIGNED};
use crate::error::{Error, Result};

/// Distances closer than this count as a tie, GHz.
pub const TIE_GHZ: f64 = 1e-9;

/// Named model transition frequencies on a common x grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCurves {
    pub x_axis: Vec<f64>,
    /// `(name, frequencies)`, frequencies aligned with `x_axis`, GHz.
    /// Non-finite entries mark points where the transition is undefined.
    pub curves: Vec<(String, Vec<f64>)>,
}

impl ModelCurves {
    pub fn new(x_axis: Vec<f64>, curves: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if x_axis.is_empty() || x_axis.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("model x axis must be non-empty and strictly ascending"));
        }
        for (name, v) in &curves {
            if v.len() != x_axis.len() {
                return Err(Error::invalid(format!(
                    "curve {name} has {} points for {} x values",
                    v.len(),
                    x_axis.len()
                )));
            }
        }
        Ok(Self { x_axis, curves })
    }

    /// Linear interpolation of curve `c` at `x`; `None` outside the grid.
    pub fn value_at(&self, c: usize, x: f64) -> Option<f64> {
        let xs = &self.x_axis;
        let ys = &self.curves[c].1;
        if !(x >= xs[0] && x <= xs[xs.len() - 1]) {
            return None;
        }
        let hi = xs.partition_point(|&v| v < x);
        let y = if hi == 0 || xs[hi] == x {
            ys[hi]
        } else {
            let lo = hi - 1;
            let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
            ys[lo] + t * (ys[hi] - ys[lo])
        };
        y.is_finite().then_some(y)
    }
}

/// Labels each marker with the nearest model curve within `tol_ghz`,
/// otherwise [`UNASSIGNED`]. Ties go to the lexicographically first name.
pub fn assign_markers(peaks: &PeakSet, model: &ModelCurves, tol_ghz: f64) -> Result<PeakSet> {
    if !(tol_ghz > 0.0) {
        return Err(Error::invalid(format!("assignment tolerance must be > 0, got {tol_ghz}")));
    }
    let mut order: Vec<usize> = (0..model.curves.len()).collect();
    order.sort_by(|&a, &b| model.curves[a].0.cmp(&model.curves[b].0));
    let mut out = peaks.clone();
    for m in &mut out.markers {
        let mut best: Option<(f64, usize)> = None;
        for &c in &order {
            let Some(y) = model.value_at(c, m.x) else { continue };
            let d = (m.f_ghz - y).abs();
            if d > tol_ghz {
                continue;
            }
            // strict improvement beyond the tie window keeps the first name on ties
            if best.is_none_or(|(bd, _)| d < bd - TIE_GHZ) {
                best = Some((d, c));
            }
        }
        m.label = match best {
            Some((_, c)) => model.curves[c].0.clone(),
            None => UNASSIGNED.to_string(),
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectroscopy::peaks::{Marker, Polarity};

    fn marker(x: f64, f: f64) -> Marker {
        Marker { x, f_ghz: f, polarity: Polarity::Max, height: 1.0, label: UNASSIGNED.into() }
    }

    fn crossing() -> ModelCurves {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let up: Vec<f64> = x.iter().map(|x| 4.0 + x).collect();
        let down: Vec<f64> = x.iter().map(|x| 5.0 - x).collect();
        ModelCurves::new(x, vec![("g0->f0".into(), down), ("g0->e0".into(), up)]).unwrap()
    }

    #[test]
    fn on_curve_and_far_markers() {
        let peaks = PeakSet { markers: vec![marker(0.2, 4.2), marker(0.2, 6.0)] };
        let out = assign_markers(&peaks, &crossing(), 0.05).unwrap();
        assert_eq!(out.markers[0].label, "g0->e0");
        assert_eq!(out.markers[1].label, UNASSIGNED);
    }

    #[test]
    fn interpolates_between_grid_points() {
        let peaks = PeakSet { markers: vec![marker(0.25, 4.25)] };
        let out = assign_markers(&peaks, &crossing(), 1e-6).unwrap();
        assert_eq!(out.markers[0].label, "g0->e0");
    }

    #[test]
    fn crossing_prefers_closer_then_first_name() {
        // curves cross at x = 0.5, f = 4.5
        let peaks = PeakSet { markers: vec![marker(0.45, 4.46), marker(0.5, 4.5), marker(0.55, 4.46)] };
        let out = assign_markers(&peaks, &crossing(), 0.1).unwrap();
        // 0.01 from the rising curve, 0.09 from the falling one
        assert_eq!(out.markers[0].label, "g0->e0");
        // exact tie
        assert_eq!(out.markers[1].label, "g0->e0");
        assert_eq!(out.markers[2].label, "g0->f0");
    }

    #[test]
    fn never_beyond_tolerance() {
        let peaks = PeakSet { markers: (0..50).map(|i| marker(i as f64 / 50.0, 4.0 + 0.03 * i as f64)).collect() };
        let model = crossing();
        let out = assign_markers(&peaks, &model, 0.02).unwrap();
        for m in out.markers.iter().filter(|m| m.is_assigned()) {
            let c = model.curves.iter().position(|(n, _)| *n == m.label).unwrap();
            assert!((model.value_at(c, m.x).unwrap() - m.f_ghz).abs() <= 0.02);
        }
    }
}
