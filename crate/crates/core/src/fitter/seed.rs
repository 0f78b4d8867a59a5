use std::f64::consts::PI;

use super::layout::{Param, ParameterLayout};
use super::phi0::wrap_phase;
use super::problem::Dataset;
use crate::circuit::{CircuitParams, JunctionModel};
use crate::error::{Error, Result};
use crate::hamiltonian::{BasisSpec, BuildOptions, ModelKind, SpectrumSolver, StateLabel, Transition};

const SEED_BASIS: usize = 30;
const MIN_MARKERS: usize = 5;
const MAX_SCORE_MARKERS: usize = 30;
const EJ_MAX: f64 = 60.0;
const BISECTIONS: usize = 30;

/// Lowest-transition trace of one dataset, one point per distinct x.
struct Trace {
    transition: Transition,
    points: Vec<(f64, f64)>,
}

fn lowest_trace(d: &Dataset) -> Option<Trace> {
    let labeled: Vec<(Transition, f64, f64)> = d
        .markers
        .markers
        .iter()
        .filter(|m| m.is_assigned())
        .filter_map(|m| m.label.parse::<Transition>().ok().map(|t| (t, m.x, m.f_ghz)))
        .collect();
    let qubit = |t: &Transition| t.initial == StateLabel::GROUND && t.end.photons == 0 && t.end.fluxonium > 0;
    let transition = labeled.iter().map(|l| l.0).filter(qubit).min_by_key(|t| t.end.fluxonium)?;
    let mut points: Vec<(f64, f64)> = labeled.iter().filter(|l| l.0 == transition).map(|l| (l.1, l.2)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup_by(|b, a| a.0 == b.0);
    Some(Trace { transition, points })
}

/// Vertex of the parabola through three points, or the middle point if
/// they are collinear.
fn vertex(p: [(f64, f64); 3]) -> f64 {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv == 0.0 {
        return x1;
    }
    let v = 0.5 * (x0 + x1) - d0 / (2.0 * curv);
    v.clamp(x0, x2)
}

/// Offset putting the trace's symmetry point at `π` (minimum) or `0`
/// (maximum), whichever extremum lies inside the window.
fn offset_seed(trace: &Trace) -> f64 {
    let p = &trace.points;
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let argmin = (0..n).min_by(|&a, &b| p[a].1.total_cmp(&p[b].1)).unwrap_or(0);
    let argmax = (0..n).max_by(|&a, &b| p[a].1.total_cmp(&p[b].1)).unwrap_or(0);
    let interior = |k: usize| k > 0 && k + 1 < n;
    if interior(argmin) || !interior(argmax) {
        let x = if interior(argmin) { vertex([p[argmin - 1], p[argmin], p[argmin + 1]]) } else { p[argmin].0 };
        wrap_phase(PI - x)
    } else {
        let flipped = [p[argmax - 1], p[argmax], p[argmax + 1]].map(|(x, y)| (x, -y));
        wrap_phase(-vertex(flipped))
    }
}

struct Seeder {
    solver: SpectrumSolver<f64>,
    design: CircuitParams,
}

impl Seeder {
    fn transition(&self, e_c: f64, e_l: f64, e_j: f64, t: Transition, phi: f64) -> Result<f64> {
        let params = CircuitParams { e_c, e_l, ..self.design };
        self.solver.solve_point(&JunctionModel::sinusoidal(e_j), &params, phi)?.transition(t)
    }

    /// `E_J` whose modulation between the window points nearest `0` and `π`
    /// matches the observed depth.
    fn invert_depth(&self, e_c: f64, e_l: f64, trace: &Trace, offset: f64) -> Result<f64> {
        let phases: Vec<f64> = trace.points.iter().map(|p| p.0 + offset).collect();
        if phases.len() < 2 {
            return Ok(0.0);
        }
        let near = |target: f64| {
            phases.iter().copied().min_by(|a, b| wrap_phase(a - target).abs().total_cmp(&wrap_phase(b - target).abs()))
        };
        let (hi_phi, lo_phi) = (near(0.0).unwrap_or(0.0), near(PI).unwrap_or(PI));
        let fs: Vec<f64> = trace.points.iter().map(|p| p.1).collect();
        let observed =
            fs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - fs.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let depth = |e_j: f64| -> Result<f64> {
            Ok(self.transition(e_c, e_l, e_j, trace.transition, hi_phi)?
                - self.transition(e_c, e_l, e_j, trace.transition, lo_phi)?)
        };
        if depth(EJ_MAX)? <= observed {
            return Ok(EJ_MAX);
        }
        let (mut a, mut b) = (0.0, EJ_MAX);
        for _ in 0..BISECTIONS {
            let m = 0.5 * (a + b);
            if depth(m)? < observed {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// RMS mismatch of the scored markers and the per-dataset `E_J` at
    /// `(e_c, e_l)`.
    fn score(&self, e_c: f64, e_l: f64, inputs: &[SeedInput]) -> Result<(f64, Vec<f64>)> {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut e_js = Vec::with_capacity(inputs.len());
        for inp in inputs {
            let e_j = match &inp.trace {
                Some(t) => self.invert_depth(e_c, e_l, t, inp.offset)?,
                None => 0.0,
            };
            for &(t, x, f) in &inp.scored {
                match self.transition(e_c, e_l, e_j, t, x + inp.offset) {
                    Ok(m) => {
                        sum += (f - m).powi(2);
                        count += 1;
                    }
                    Err(Error::Labeling(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            e_js.push(e_j);
        }
        let rms = if count == 0 { f64::INFINITY } else { (sum / count as f64).sqrt() };
        Ok((rms, e_js))
    }
}

/// `(rms, E_C, E_L, E_J per dataset)` of a grid point.
type GridPoint = (f64, f64, f64, Vec<f64>);

impl Seeder {
    /// Best point of the `(2 half + 1)^2` geometric grid around the centre.
    fn grid(&self, centre_c: f64, centre_l: f64, ratio: f64, half: i32, inputs: &[SeedInput]) -> Result<GridPoint> {
        let mut best: GridPoint = (f64::INFINITY, centre_c, centre_l, vec![0.0; inputs.len()]);
        for i in -half..=half {
            for j in -half..=half {
                let e_c = centre_c * ratio.powi(i);
                let e_l = centre_l * ratio.powi(j);
                let (rms, e_js) = self.score(e_c, e_l, inputs)?;
                if rms < best.0 {
                    best = (rms, e_c, e_l, e_js);
                }
            }
        }
        Ok(best)
    }
}

struct SeedInput {
    trace: Option<Trace>,
    offset: f64,
    scored: Vec<(Transition, f64, f64)>,
}

fn scored_markers(d: &Dataset) -> Vec<(Transition, f64, f64)> {
    let all: Vec<(Transition, f64, f64)> = d
        .markers
        .markers
        .iter()
        .filter(|m| m.is_assigned())
        .filter_map(|m| m.label.parse::<Transition>().ok().map(|t| (t, m.x, m.f_ghz)))
        .filter(|(t, _, _)| t.initial.photons == 0 && t.end.photons == 0)
        .collect();
    let stride = all.len().div_ceil(MAX_SCORE_MARKERS).max(1);
    all.into_iter().step_by(stride).collect()
}

/// Starting layout for fitting `datasets`.
///
/// Offsets come from the symmetry point of each dataset's lowest qubit
/// transition. `E_C` and `E_L` are chosen on a geometric grid around the
/// design values, with each dataset's `E_J` obtained at every grid point
/// by inverting the modulation depth of the lowest transition; the grid
/// point with the smallest marker mismatch wins. `L_r` and `L_s` keep their
/// design values and are frozen for the uncoupled model.
pub fn initial_guess(datasets: &[Dataset], design: &CircuitParams, model: ModelKind) -> Result<ParameterLayout> {
    if datasets.is_empty() || datasets.iter().all(|d| d.assigned_count() < MIN_MARKERS) {
        return Err(Error::Config(format!("seeding needs a dataset with at least {MIN_MARKERS} assigned markers")));
    }
    let inputs: Vec<SeedInput> = datasets
        .iter()
        .map(|d| {
            let trace = lowest_trace(d);
            let offset = trace.as_ref().map_or(0.0, offset_seed);
            SeedInput { trace, offset, scored: scored_markers(d) }
        })
        .collect();
    let levels = inputs
        .iter()
        .flat_map(|i| i.scored.iter().map(|s| s.0.initial.fluxonium.max(s.0.end.fluxonium) + 1))
        .max()
        .unwrap_or(2);
    let options = BuildOptions { verify_quadrature: false, ..BuildOptions::default() };
    let solver = SpectrumSolver::new(ModelKind::Uncoupled, BasisSpec::uncoupled(SEED_BASIS), options)?
        .with_levels(levels.max(2));
    let seeder = Seeder { solver, design: *design };

    let coarse = seeder.grid(design.e_c, design.e_l, 2f64.powf(0.25), 4, &inputs)?;
    let fine = seeder.grid(coarse.1, coarse.2, 2f64.powf(1.0 / 16.0), 3, &inputs)?;
    let best = if fine.0 < coarse.0 { fine } else { coarse };
    let (rms, e_c, e_l, e_js) = best;
    log::info!("seed E_C = {e_c:.4}, E_L = {e_l:.4}, mismatch {rms:.4} GHz");

    let seeded = CircuitParams { e_c, e_l, ..*design };
    let mut layout = ParameterLayout::sinusoidal(&seeded, &e_js);
    for ((s, d), inp) in layout.spectra.iter_mut().zip(datasets).zip(&inputs) {
        s.name = d.name.clone();
        s.phi_offset.value = inp.offset;
    }
    if model == ModelKind::Coupled {
        layout.shared.l_r = Param::free(design.l_r, 0.5 * design.l_r, 2.0 * design.l_r);
        layout.shared.l_s = Param::free(design.l_s, 0.0, 2.0 * design.l_s + 1.0);
    }
    Ok(layout)
}
