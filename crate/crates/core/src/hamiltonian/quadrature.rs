//! Gauss-Hermite quadrature over harmonic-oscillator eigenfunctions.
//!
//! Matrix elements of an arbitrary potential `V(φ_ext + ℓ ξ)` between
//! oscillator states are `∫ h_j(ξ) h_k(ξ) V dξ`, where `h_k` are the
//! normalized Hermite functions. The table stores `h_k(ξ_i)` together with
//! the modified weights `w_i exp(ξ_i^2) = 1 / Σ_k h_k(ξ_i)^2`, folded in as
//! `sqrt(w_i) h_k(ξ_i)`. The Hermite recursion runs with a running exponent
//! so large node counts neither underflow nor overflow.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported node count.
pub const MAX_NODES: usize = 2560;

/// Rescaling threshold for the Hermite recursion.
const BIG: f64 = 1e100;

#[derive(Debug, Clone)]
pub struct HermiteQuadrature<T> {
    nodes: Vec<T>,
    /// `values[(k, i)] = sqrt(w_i) h_k(ξ_i)` with the modified weight
    /// `w_i = 1 / Σ_{m<N} h_m(ξ_i)^2`, one row per basis function.
    values: DMatrix<T>,
}

#[derive(Debug)]
struct NodeSet {
    nodes: Vec<f64>,
    /// `ln sqrt(Σ_{m<N} h_m(ξ_i)^2)`.
    log_norm: Vec<f64>,
}

fn node_set(n_nodes: usize) -> Result<Arc<NodeSet>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<NodeSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(set) = cache.lock().map_err(|_| Error::numerical("node cache poisoned"))?.get(&n_nodes) {
        return Ok(set.clone());
    }
    let set = Arc::new(compute_node_set(n_nodes)?);
    cache.lock().map_err(|_| Error::numerical("node cache poisoned"))?.insert(n_nodes, set.clone());
    Ok(set)
}

/// `h_0 .. h_{count-1}` at `x` as pairs `(m, s)` with `h_k = m e^s`.
fn hermite_scaled(x: f64, count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut s = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out.push((cur, s));
    for k in 0..count.saturating_sub(1) {
        let kf = k as f64;
        let mut next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        if next.abs() > BIG {
            next /= BIG;
            cur /= BIG;
            s += BIG.ln();
        }
        out.push((next, s));
        prev = cur;
        cur = next;
    }
    out
}

/// Number of eigenvalues of the Jacobi matrix of `H_n` below `x`.
fn jacobi_count_below(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = -x;
    for i in 0..n {
        if i > 0 {
            q = -x - (i as f64 / 2.0) / q;
        }
        if q.abs() < 1e-300 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn compute_node_set(n: usize) -> Result<NodeSet> {
    // roots of H_n lie inside ±sqrt(2n + 1); symmetric, so bisect the upper half
    let bound = (2.0 * n as f64 + 1.0).sqrt();
    let mut upper = Vec::with_capacity(n / 2 + 1);
    for k in n / 2..n {
        let (mut lo, mut hi) = (0.0f64, bound);
        if n % 2 == 1 && k == n / 2 {
            upper.push(0.0);
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if jacobi_count_below(n, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
        }
        upper.push(0.5 * (lo + hi));
    }
    // Newton polish on h_n, whose roots are the roots of H_n
    for x in upper.iter_mut().filter(|x| **x != 0.0) {
        for _ in 0..3 {
            let h = hermite_scaled(*x, n + 1);
            let (a, sa) = h[n];
            let (b, sb) = h[n - 1];
            if b == 0.0 {
                break;
            }
            let step = a / b * (sa - sb).exp() / (2.0 * n as f64).sqrt();
            if !step.is_finite() || step.abs() > 1e-6 * x.abs().max(1.0) {
                break;
            }
            *x -= step;
        }
    }
    let mut nodes: Vec<f64> = upper.iter().rev().filter(|x| **x != 0.0).map(|x| -x).collect();
    nodes.extend(upper.iter().copied());
    if nodes.len() != n {
        return Err(Error::numerical(format!("found {} of {n} Gauss-Hermite nodes", nodes.len())));
    }
    let log_norm = nodes
        .iter()
        .map(|&x| {
            let h = hermite_scaled(x, n);
            let top =
                h.iter().filter(|(m, _)| *m != 0.0).map(|(m, s)| m.abs().ln() + s).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = h.iter().map(|(m, s)| (m * (s - top).exp()).powi(2)).sum();
            top + 0.5 * sum.ln()
        })
        .collect();
    Ok(NodeSet { nodes, log_norm })
}

/// Gauss-Hermite nodes and modified weights `w_i e^{ξ_i^2}` for `n_nodes`
/// points. The outermost weights overflow to infinity for large counts; the
/// quadrature tables never form them explicitly.
pub fn gauss_hermite_nodes(n_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_nodes == 0 || n_nodes > MAX_NODES {
        return Err(Error::invalid(format!("Gauss-Hermite node count {n_nodes} outside 1..={MAX_NODES}")));
    }
    let set = node_set(n_nodes)?;
    let weights = set.log_norm.iter().map(|l| (-2.0 * l).exp()).collect();
    Ok((set.nodes.clone(), weights))
}

/// Normalized Hermite functions `h_0(x) .. h_{count-1}(x)`; values below
/// the `f64` range flush to zero.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    hermite_scaled(x, count).into_iter().map(|(m, s)| m * s.exp()).collect()
}

impl<T: Scalar> HermiteQuadrature<T> {
    /// Table for the first `n_basis` Hermite functions on `n_nodes` nodes.
    pub fn new(n_basis: usize, n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 || n_nodes > MAX_NODES {
            return Err(Error::invalid(format!("Gauss-Hermite node count {n_nodes} outside 1..={MAX_NODES}")));
        }
        let set = node_set(n_nodes)?;
        let mut values = DMatrix::<T>::zeros(n_basis, n_nodes);
        for (i, (&x, &norm)) in set.nodes.iter().zip(&set.log_norm).enumerate() {
            for (k, (m, s)) in hermite_scaled(x, n_basis).into_iter().enumerate() {
                values[(k, i)] = T::lit(m * (s - norm).exp());
            }
        }
        Ok(Self { nodes: set.nodes.iter().map(|&x| T::lit(x)).collect(), values })
    }

    pub fn n_basis(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Matrix of `f(ξ)` in the Hermite-function basis.
    pub fn operator_matrix<F: Fn(T) -> T>(&self, f: F) -> DMatrix<T> {
        let scaled = DVector::from_iterator(self.n_nodes(), self.nodes.iter().map(|&x| f(x)));
        let mut weighted = self.values.clone();
        for (mut col, s) in weighted.column_iter_mut().zip(scaled.iter()) {
            col *= *s;
        }
        let mut m = &weighted * self.values.transpose();
        // exact symmetry; the product is symmetric up to rounding
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                let avg = (m[(i, j)] + m[(j, i)]) * T::lit(0.5);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        m
    }
}
