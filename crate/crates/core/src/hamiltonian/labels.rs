use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Squared overlap below which a level is flagged as mixed.
pub const MIXED_OVERLAP: f64 = 0.25;
const OVERLAP_TIE: f64 = 1e-6;
const DEGENERATE_GAP: f64 = 1e-10;

/// Uncoupled product state `(m, n)`: fluxonium level `m`, resonator photon
/// number `n`. Displayed as `g0`, `e1`, `f0`, `h2`, and `4_0` from `m = 4` up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    pub fluxonium: usize,
    pub photons: usize,
}

const LETTERS: [char; 4] = ['g', 'e', 'f', 'h'];

impl StateLabel {
    pub const fn new(fluxonium: usize, photons: usize) -> Self {
        Self { fluxonium, photons }
    }

    pub const GROUND: StateLabel = StateLabel::new(0, 0);
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match LETTERS.get(self.fluxonium) {
            Some(c) => write!(f, "{c}{}", self.photons),
            None => write!(f, "{}_{}", self.fluxonium, self.photons),
        }
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Labeling(format!("cannot parse state label {s:?}"));
        let first = s.chars().next().ok_or_else(bad)?;
        if let Some(m) = LETTERS.iter().position(|&c| c == first) {
            let rest = s[1..].trim_start_matches('_');
            let photons = if rest.is_empty() { 0 } else { rest.parse().map_err(|_| bad())? };
            return Ok(StateLabel::new(m, photons));
        }
        let (m, n) = s.split_once('_').ok_or_else(bad)?;
        Ok(StateLabel::new(m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?))
    }
}

/// A transition `initial -> final`, written `g0->e0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub initial: StateLabel,
    pub end: StateLabel,
}

impl Transition {
    pub const fn new(initial: StateLabel, end: StateLabel) -> Self {
        Self { initial, end }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.initial, self.end)
    }
}

impl FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.replace('→', "->");
        let (a, b) =
            normalized.split_once("->").ok_or_else(|| Error::Labeling(format!("cannot parse transition {s:?}")))?;
        let state = |x: &str| {
            x.parse::<StateLabel>().map_err(|e| Error::Labeling(format!("cannot parse transition {s:?}: {e}")))
        };
        Ok(Transition::new(state(a)?, state(b)?))
    }
}

impl Serialize for Transition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Transition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for StateLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Label of one coupled eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelLabel {
    pub label: StateLabel,
    /// Squared overlap with the assigned product state.
    pub overlap: f64,
    /// Set when `overlap < MIXED_OVERLAP`; the label is kept anyway.
    pub mixed: bool,
}

/// Assigns product labels `(m, n)` to the lowest `coupled_values.len()`
/// coupled eigenstates by maximal squared overlap, one-to-one.
///
/// `coupled_vectors` has one column per coupled level in the resonator-major
/// product basis; `fluxonium_vectors` holds the uncoupled fluxonium
/// eigenvectors (columns) in the oscillator basis; `resonator_levels[n]` is
/// the bare resonator energy with `n` photons.
pub fn label_states<T: Scalar>(
    coupled_values: &DVector<T>,
    coupled_vectors: &DMatrix<T>,
    fluxonium_values: &DVector<T>,
    fluxonium_vectors: &DMatrix<T>,
    resonator_levels: &[T],
) -> Result<Vec<LevelLabel>> {
    let nf = fluxonium_vectors.nrows();
    let nr = resonator_levels.len();
    let levels = coupled_values.len();
    if coupled_vectors.nrows() != nf * nr || coupled_vectors.ncols() < levels {
        return Err(Error::Labeling(format!(
            "coupled vectors {}x{} incompatible with {nf} fluxonium x {nr} resonator states",
            coupled_vectors.nrows(),
            coupled_vectors.ncols()
        )));
    }
    if levels > nf * nr {
        return Err(Error::Labeling("more levels than product states".into()));
    }

    // overlaps[(l, n * nf + m)] = |<m, n | l>|^2
    let n_states = nf * nr;
    let mut overlaps = DMatrix::<f64>::zeros(levels, n_states);
    let coupled = coupled_vectors.columns(0, levels);
    for n in 0..nr {
        let block = coupled.rows(n * nf, nf);
        let proj = block.transpose() * fluxonium_vectors;
        for l in 0..levels {
            for m in 0..nf {
                let v = proj[(l, m)].to_f64_lossy();
                overlaps[(l, n * nf + m)] = v * v;
            }
        }
    }
    let product_energy = |s: usize| {
        let (n, m) = (s / nf, s % nf);
        (fluxonium_values[m] + resonator_levels[n]).to_f64_lossy()
    };
    let level_energy = |l: usize| coupled_values[l].to_f64_lossy();
    let degenerate = |l: usize| {
        let e = level_energy(l);
        let scale = e.abs().max(1.0);
        let near = |o: usize| (level_energy(o) - e).abs() < DEGENERATE_GAP * scale;
        (l > 0 && near(l - 1)) || (l + 1 < levels && near(l + 1))
    };

    let mut level_done = vec![false; levels];
    let mut state_used = vec![false; n_states];
    let mut out: Vec<Option<LevelLabel>> = vec![None; levels];
    for _ in 0..levels {
        let mut best = f64::NEG_INFINITY;
        for l in (0..levels).filter(|&l| !level_done[l]) {
            for s in (0..n_states).filter(|&s| !state_used[s]) {
                best = best.max(overlaps[(l, s)]);
            }
        }
        // among near-ties, prefer the closest uncoupled energy
        let mut pick: Option<(usize, usize, f64)> = None;
        for l in (0..levels).filter(|&l| !level_done[l]) {
            for s in (0..n_states).filter(|&s| !state_used[s]) {
                if overlaps[(l, s)] < best - OVERLAP_TIE {
                    continue;
                }
                let dist = if degenerate(l) { 0.0 } else { (level_energy(l) - product_energy(s)).abs() };
                if pick.is_none_or(|(_, _, d)| dist < d) {
                    pick = Some((l, s, dist));
                }
            }
        }
        let (l, s, _) = pick.ok_or_else(|| Error::Labeling("no free product state left".into()))?;
        level_done[l] = true;
        state_used[s] = true;
        let overlap = overlaps[(l, s)];
        out[l] = Some(LevelLabel { label: StateLabel::new(s % nf, s / nf), overlap, mixed: overlap < MIXED_OVERLAP });
    }
    Ok(out.into_iter().map(|l| l.expect("every level assigned")).collect())
}
