//! Bounded nonlinear least squares: Levenberg-Marquardt in trust-region
//! form with Moré's diagonal scaling.
//!
//! Each iteration solves `min ||r + J p||` subject to `||D p|| <= Δ` over
//! the parameters not pinned at a bound, projects the trial point onto the
//! box, and accepts it only if the objective `Σ r_i^2` decreases. The
//! Jacobian is formed by central differences (parallel over columns).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative finite-difference step.
pub const FD_REL_STEP: f64 = 1e-6;
/// Absolute floor of the finite-difference step.
pub const FD_ABS_STEP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Relative parameter tolerance.
    pub x_tol: f64,
    /// Relative objective-reduction tolerance.
    pub f_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iter: 200, x_tol: 1e-10, f_tol: 1e-12 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.x_tol > 0.0) || !(self.f_tol > 0.0) {
            return Err(Error::Config(format!("x_tol and f_tol must be > 0, got {} and {}", self.x_tol, self.f_tol)));
        }
        Ok(())
    }
}

/// One accepted or rejected trust-region iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective `Σ r_i^2` of the current (accepted) point after this iteration.
    pub objective: f64,
    pub trust_radius: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Objective reduction below `f_tol`.
    FTol,
    /// Step or trust radius below `x_tol`.
    XTol,
    /// Projected gradient vanished (includes an exact fit).
    Gradient,
    MaxIter,
}

impl Termination {
    pub fn converged(self) -> bool {
        self != Termination::MaxIter
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresReport {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub log: Vec<IterationRecord>,
    /// Jacobian at `x`.
    pub jacobian: DMatrix<f64>,
}

impl LeastSquaresReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

/// Column `j` of the Jacobian by central differences, falling back to a
/// one-sided difference next to a bound.
fn jacobian_column<F>(f: &F, x: &[f64], r0: &[f64], j: usize, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let h = (FD_REL_STEP * x[j].abs()).max(FD_ABS_STEP);
    let eval = |v: f64| {
        let mut xp = x.to_vec();
        xp[j] = v;
        f(&xp)
    };
    let up_ok = x[j] + h <= upper[j];
    let down_ok = x[j] - h >= lower[j];
    let col = match (up_ok, down_ok) {
        (true, true) => {
            let a = eval(x[j] + h)?;
            let b = eval(x[j] - h)?;
            a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        }
        (true, false) => eval(x[j] + h)?.iter().zip(r0).map(|(a, b)| (a - b) / h).collect(),
        (false, true) => r0.iter().zip(&eval(x[j] - h)?).map(|(a, b)| (a - b) / h).collect(),
        (false, false) => {
            return Err(Error::Config(format!("parameter {j} has a box narrower than its difference step {h:e}")))
        }
    };
    Ok(col)
}

/// Central-difference Jacobian of `f` at `x`.
pub fn numerical_jacobian<F>(f: &F, x: &[f64], r0: &[f64], lower: &[f64], upper: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let cols: Vec<Vec<f64>> =
        (0..x.len()).into_par_iter().map(|j| jacobian_column(f, x, r0, j, lower, upper)).collect::<Result<_>>()?;
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, x.len());
    for (j, col) in cols.iter().enumerate() {
        if col.len() != m {
            return Err(Error::numerical("residual length changed between evaluations"));
        }
        for (i, v) in col.iter().enumerate() {
            jac[(i, j)] = *v;
        }
    }
    Ok(jac)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Levenberg-Marquardt step on the free subspace: `p = -(A + λ I)^{-1} g` in
/// scaled variables, with `λ >= 0` chosen so that `||p|| <= radius`.
fn trust_region_step(a: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let cutoff = top * 1e-14;
    let proj = eig.eigenvectors.transpose() * g;
    let norm_at = |lambda: f64| -> f64 {
        eig.eigenvalues
            .iter()
            .zip(proj.iter())
            .map(|(&s, &c)| {
                let d = s.max(0.0) + lambda;
                if d <= cutoff {
                    0.0
                } else {
                    (c / d).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };
    let step_at = |lambda: f64| -> DVector<f64> {
        let coeff = DVector::from_iterator(
            proj.len(),
            eig.eigenvalues.iter().zip(proj.iter()).map(|(&s, &c)| {
                let d = s.max(0.0) + lambda;
                if d <= cutoff {
                    0.0
                } else {
                    -c / d
                }
            }),
        );
        &eig.eigenvectors * coeff
    };
    if norm_at(0.0) <= radius {
        return step_at(0.0);
    }
    // ||p(λ)|| decreases monotonically; bracket and bisect on log λ
    let mut lo = 0.0f64;
    let mut hi = (g.norm() / radius).max(f64::MIN_POSITIVE);
    while norm_at(hi) > radius {
        lo = hi;
        hi *= 10.0;
    }
    for _ in 0..100 {
        let mid = if lo == 0.0 { 0.5 * hi } else { (lo * hi).sqrt() };
        if norm_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-3 * hi {
            break;
        }
    }
    step_at(hi)
}

/// Minimizes `Σ f(x)_i^2` over the box `lower <= x <= upper`.
///
/// `f` must be safe to call concurrently. A failing evaluation at a trial
/// point counts as a rejected step; failures at the accepted point or in
/// the Jacobian are returned.
pub fn least_squares<F>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &OptimizerConfig,
) -> Result<LeastSquaresReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    config.validate()?;
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Config("bounds and start point differ in length".into()));
    }
    for j in 0..n {
        if !(lower[j] <= x0[j] && x0[j] <= upper[j]) {
            return Err(Error::Config(format!(
                "start value {} of parameter {j} outside [{}, {}]",
                x0[j], lower[j], upper[j]
            )));
        }
    }
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("residuals not finite at the start point"));
    }
    let mut obj = sum_sq(&r);
    let mut log = Vec::new();
    let mut jac = numerical_jacobian(&f, &x, &r, lower, upper)?;
    let mut scale: Vec<f64> = (0..n).map(|j| jac.column(j).norm().max(1e-12)).collect();
    let x_norm = |x: &[f64], d: &[f64]| x.iter().zip(d).map(|(a, b)| (a * b).powi(2)).sum::<f64>().sqrt();
    let mut radius = {
        let v = 100.0 * x_norm(&x, &scale);
        if v > 0.0 {
            v
        } else {
            100.0
        }
    };
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        if obj == 0.0 {
            termination = Termination::Gradient;
            break;
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        // variables pinned at a bound with the descent direction pointing out
        let free: Vec<usize> =
            (0..n).filter(|&j| !((x[j] <= lower[j] && grad[j] > 0.0) || (x[j] >= upper[j] && grad[j] < 0.0))).collect();
        let pg = free.iter().map(|&j| (grad[j] / scale[j]).abs()).fold(0.0, f64::max);
        if free.is_empty() || pg <= 1e-14 * obj.sqrt() {
            termination = Termination::Gradient;
            break;
        }
        let k = free.len();
        let mut js = DMatrix::zeros(r.len(), k);
        for (c, &j) in free.iter().enumerate() {
            js.set_column(c, &(jac.column(j) / scale[j]));
        }
        let a = js.transpose() * &js;
        let g = DVector::from_iterator(k, free.iter().map(|&j| grad[j] / scale[j]));

        let p_scaled = trust_region_step(&a, &g, radius);
        let mut trial = x.clone();
        for (c, &j) in free.iter().enumerate() {
            trial[j] = (x[j] + p_scaled[c] / scale[j]).clamp(lower[j], upper[j]);
        }
        let step: Vec<f64> = trial.iter().zip(&x).map(|(t, c)| t - c).collect();
        let step_norm = x_norm(&step, &scale);
        let pvec = DVector::from_column_slice(&step);
        let lin = &rv + &jac * &pvec;
        let predicted = obj - lin.norm_squared();

        let trial_r = f(&trial).ok().filter(|v| v.len() == r.len() && v.iter().all(|x| x.is_finite()));
        let (actual, trial_obj) = match &trial_r {
            Some(tr) => {
                let t = sum_sq(tr);
                (obj - t, t)
            }
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };

        if rho < 0.25 {
            radius = 0.25 * step_norm.min(radius);
        } else if rho > 0.75 && step_norm >= 0.99 * radius {
            radius *= 2.0;
        }
        let accepted = rho > 1e-4 && trial_obj < obj;
        let mut done = None;
        if accepted {
            let prev = obj;
            x = trial;
            r = trial_r.expect("accepted steps have residuals");
            obj = trial_obj;
            if actual.abs() <= config.f_tol * prev && predicted <= config.f_tol * prev && rho <= 2.0 {
                done = Some(Termination::FTol);
            }
            if step.iter().zip(&x).all(|(p, v)| p.abs() <= config.x_tol * (v.abs() + config.x_tol)) {
                done = done.or(Some(Termination::XTol));
            }
        }
        if radius <= config.x_tol * x_norm(&x, &scale) || radius == 0.0 {
            done = done.or(Some(Termination::XTol));
        }
        log.push(IterationRecord { iter: iterations, objective: obj, trust_radius: radius, step_norm, accepted });
        if accepted {
            jac = numerical_jacobian(&f, &x, &r, lower, upper)?;
            for (j, s) in scale.iter_mut().enumerate() {
                *s = s.max(jac.column(j).norm());
            }
        }
        if let Some(t) = done {
            termination = t;
            break;
        }
    }

    Ok(LeastSquaresReport { x, residuals: r, objective: obj, iterations, termination, log, jacobian: jac })
}

/// Near-null directions of a Jacobian after column scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakDirection {
    /// Smallest singular value over the largest, column-scaled Jacobian.
    pub relative_singular_value: f64,
    /// Unit vector in scaled parameter space, one entry per parameter.
    pub components: Vec<f64>,
}

/// Directions whose scaled singular value falls below `threshold` times
/// the largest one. Columns are normalized first so units do not matter.
pub fn weak_directions(jac: &DMatrix<f64>, threshold: f64) -> Vec<WeakDirection> {
    let n = jac.ncols();
    if n == 0 {
        return Vec::new();
    }
    let mut js = jac.clone();
    for j in 0..n {
        let norm = js.column(j).norm();
        if norm > 0.0 {
            js.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let eig = SymmetricEigen::new(js.transpose() * &js);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
    let mut out: Vec<WeakDirection> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let s = v.max(0.0).sqrt();
            let rel = if top > 0.0 { s / top } else { 0.0 };
            (rel < threshold).then(|| WeakDirection {
                relative_singular_value: rel,
                components: eig.eigenvectors.column(i).iter().copied().collect(),
            })
        })
        .collect();
    out.sort_by(|a, b| a.relative_singular_value.total_cmp(&b.relative_singular_value));
    out
}

/// Sine of the angle between each normalized Jacobian column and the span
/// of the others, `1 / sqrt((ĴᵀĴ)^+_jj)`. Values near 0 mark parameters
/// the data cannot separate from some combination of the rest; exactly
/// dependent and zero columns give 0.
pub fn column_independence(jac: &DMatrix<f64>) -> Vec<f64> {
    let n = jac.ncols();
    let mut js = jac.clone();
    let mut zero = vec![false; n];
    for (j, z) in zero.iter_mut().enumerate() {
        let norm = js.column(j).norm();
        if norm > 0.0 {
            js.column_mut(j).scale_mut(1.0 / norm);
        } else {
            *z = true;
        }
    }
    let eig = SymmetricEigen::new(js.transpose() * &js);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    (0..n)
        .map(|j| {
            if zero[j] {
                return 0.0;
            }
            let mut diag = 0.0;
            for (i, &v) in eig.eigenvalues.iter().enumerate() {
                let u2 = eig.eigenvectors[(j, i)].powi(2);
                if v > 1e-14 * top {
                    diag += u2 / v;
                } else if u2 > 1e-12 {
                    return 0.0;
                }
            }
            (1.0 / diag.sqrt()).min(1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]])
    }

    #[test]
    fn solves_rosenbrock() {
        let inf = f64::INFINITY;
        let rep =
            least_squares(rosenbrock, &[-1.2, 1.0], &[-inf, -inf], &[inf, inf], &OptimizerConfig::default()).unwrap();
        assert!(rep.converged(), "{:?}", rep.termination);
        assert!((rep.x[0] - 1.0).abs() < 1e-8 && (rep.x[1] - 1.0).abs() < 1e-8, "{:?}", rep.x);
    }

    #[test]
    fn objective_never_increases() {
        let inf = f64::INFINITY;
        let rep =
            least_squares(rosenbrock, &[-1.2, 1.0], &[-inf, -inf], &[inf, inf], &OptimizerConfig::default()).unwrap();
        assert!(rep.log.windows(2).all(|w| w[1].objective <= w[0].objective));
    }

    #[test]
    fn respects_bounds() {
        // unconstrained minimum at x = 3
        let f = |x: &[f64]| Ok(vec![x[0] - 3.0]);
        let rep = least_squares(f, &[0.0], &[-1.0], &[2.0], &OptimizerConfig::default()).unwrap();
        assert_eq!(rep.x[0], 2.0);
        assert!(rep.converged());
    }

    #[test]
    fn fits_exponential_decay() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-0.7 * t).exp() + 0.3).collect();
        let f = |p: &[f64]| Ok(t.iter().zip(&y).map(|(t, y)| p[0] * (-p[1] * t).exp() + p[2] - y).collect());
        let inf = f64::INFINITY;
        let rep = least_squares(f, &[1.0, 0.2, 0.0], &[-inf, 0.0, -inf], &[inf, inf, inf], &OptimizerConfig::default())
            .unwrap();
        assert!((rep.x[0] - 2.5).abs() < 1e-7 && (rep.x[1] - 0.7).abs() < 1e-7 && (rep.x[2] - 0.3).abs() < 1e-7);
    }

    #[test]
    fn max_iter_flags_non_convergence() {
        let inf = f64::INFINITY;
        let cfg = OptimizerConfig { max_iter: 2, ..OptimizerConfig::default() };
        let rep = least_squares(rosenbrock, &[-1.2, 1.0], &[-inf, -inf], &[inf, inf], &cfg).unwrap();
        assert_eq!(rep.termination, Termination::MaxIter);
        assert!(!rep.converged());
    }

    #[test]
    fn rejects_start_outside_box() {
        let f = |x: &[f64]| Ok(vec![x[0]]);
        assert!(least_squares(f, &[5.0], &[0.0], &[1.0], &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn jacobian_matches_analytic() {
        let f = |x: &[f64]| Ok(vec![x[0].sin() * x[1], x[1].powi(3)]);
        let x = [0.4, 1.3];
        let r0 = f(&x).unwrap();
        let inf = f64::INFINITY;
        let j = numerical_jacobian(&f, &x, &r0, &[-inf, -inf], &[inf, inf]).unwrap();
        assert!((j[(0, 0)] - 0.4f64.cos() * 1.3).abs() < 1e-8);
        assert!((j[(0, 1)] - 0.4f64.sin()).abs() < 1e-8);
        assert!((j[(1, 1)] - 3.0 * 1.3f64 * 1.3).abs() < 1e-7);
    }

    #[test]
    fn independence_of_orthogonal_parallel_and_zero_columns() {
        let ortho = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let s = column_independence(&ortho);
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        // columns at 45 degrees
        let tilted = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((column_independence(&tilted)[0] - 0.5f64.sqrt()).abs() < 1e-12);
        let parallel = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.5, 1.0, 1.0, 2.0, 4.0, 0.3]);
        let s = column_independence(&parallel);
        assert_eq!(&s[..2], &[0.0, 0.0]);
        assert!(s[2] > 0.1);
        let with_zero = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(column_independence(&with_zero), vec![1.0, 0.0]);
    }

    #[test]
    fn duplicated_column_is_weak() {
        let jac = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.5, 1.0, 1.0, 2.0, 4.0, 0.3]);
        let weak = weak_directions(&jac, 1e-6);
        assert_eq!(weak.len(), 1);
        let c = &weak[0].components;
        // direction mixes the first two (parallel) columns only
        assert!(c[2].abs() < 1e-8 && (c[0].abs() - c[1].abs()).abs() < 1e-8);
    }
}
