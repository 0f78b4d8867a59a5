//! Circuit parameters, unit conversions and junction energy-phase relations.
//!
//! Every energy is stored as a frequency `E/h` in GHz. Inductances (nH) and
//! capacitances (fF) are converted to GHz only here, through
//! [`PhysicalConstants`], so the Hamiltonian code never sees SI units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// SI constants (2019 exact definitions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Magnetic flux quantum, Wb.
    pub phi0: f64,
    /// Planck constant, J s.
    pub h: f64,
    /// Elementary charge, C.
    pub e: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        phi0: 6.626_070_15e-34 / (2.0 * 1.602_176_634e-19),
        h: 6.626_070_15e-34,
        e: 1.602_176_634e-19,
    };

    /// Reduced flux quantum squared, `(Φ0/2π)^2`, in Wb^2.
    pub fn reduced_flux_quantum_sq(&self) -> f64 {
        let r = self.phi0 / (2.0 * std::f64::consts::PI);
        r * r
    }

    /// Inductive energy in GHz of an inductance given in nH.
    pub fn inductive_energy_ghz(&self, inductance_nh: f64) -> f64 {
        self.reduced_flux_quantum_sq() / (inductance_nh * 1e-9) / self.h / 1e9
    }

    /// Inverse of [`Self::inductive_energy_ghz`]: inductance in nH for an
    /// inductive energy in GHz.
    pub fn inductance_nh(&self, energy_ghz: f64) -> f64 {
        self.reduced_flux_quantum_sq() / (self.h * energy_ghz * 1e9) * 1e9
    }

    /// Single-electron charging energy `e^2/2C` in GHz for a capacitance in fF.
    pub fn charging_energy_ghz(&self, capacitance_ff: f64) -> f64 {
        self.e * self.e / (2.0 * capacitance_ff * 1e-15) / self.h / 1e9
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Device energies, inductances and capacitance shared by every spectrum of
/// one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CircuitParams<T = f64> {
    /// Fluxonium charging energy, GHz.
    #[serde(rename = "E_C_GHz")]
    pub e_c: T,
    /// Superinductance energy, GHz.
    #[serde(rename = "E_L_GHz")]
    pub e_l: T,
    /// Readout resonator capacitance, fF.
    #[serde(rename = "C_r_fF")]
    pub c_r: T,
    /// Readout resonator inductance, nH.
    #[serde(rename = "L_r_nH")]
    pub l_r: T,
    /// Shared coupling inductance, nH.
    #[serde(rename = "L_s_nH")]
    pub l_s: T,
}

/// Resonator charging and inductive energies, GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorEnergies<T> {
    pub e_cr: T,
    pub e_lr: T,
}

impl<T: Scalar> ResonatorEnergies<T> {
    /// Bare resonator frequency `sqrt(8 E_Cr E_Lr)`, GHz.
    pub fn frequency(&self) -> T {
        (T::lit(8.0) * self.e_cr * self.e_lr).sqrt()
    }
}

impl CircuitParams<f64> {
    /// Device A of the nanowire fluxonium experiment.
    pub const DEVICE_A: CircuitParams<f64> = CircuitParams { e_c: 2.35, e_l: 0.7, c_r: 26.0, l_r: 47.0, l_s: 8.5 };

    /// Device B of the nanowire fluxonium experiment.
    pub const DEVICE_B: CircuitParams<f64> = CircuitParams { e_c: 1.75, e_l: 1.1, c_r: 26.0, l_r: 42.0, l_s: 4.6 };
}

impl<T: Scalar> CircuitParams<T> {
    pub fn new(e_c: T, e_l: T, c_r: T, l_r: T, l_s: T) -> Self {
        Self { e_c, e_l, c_r, l_r, l_s }
    }

    pub fn cast<U: Scalar>(&self) -> CircuitParams<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        CircuitParams { e_c: c(self.e_c), e_l: c(self.e_l), c_r: c(self.c_r), l_r: c(self.l_r), l_s: c(self.l_s) }
    }

    /// Checks that all fields are finite and strictly positive.
    ///
    /// `L_s = 0` is accepted as the decoupled limit. The returned strings are
    /// non-fatal warnings (currently only the `L_f >> L_s, L_r` heuristic).
    pub fn validate(&self) -> Result<Vec<String>> {
        let fields = [("E_C", self.e_c), ("E_L", self.e_l), ("C_r", self.c_r), ("L_r", self.l_r)];
        for (name, v) in fields {
            if !v.is_finite_value() || v <= T::zero() {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {}", v.to_f64_lossy())));
            }
        }
        if !self.l_s.is_finite_value() || self.l_s < T::zero() {
            return Err(Error::invalid(format!("L_s must be finite and >= 0, got {}", self.l_s.to_f64_lossy())));
        }
        let mut warnings = Vec::new();
        let l_f = self.fluxonium_inductance_nh();
        let l_max = self.l_s.to_f64_lossy().max(self.l_r.to_f64_lossy());
        if l_f < 5.0 * l_max {
            warnings.push(format!(
                "L_f = {l_f:.1} nH is not much larger than max(L_s, L_r) = {l_max:.1} nH; \
                 the coupled Hamiltonian assumes L_f >> L_s, L_r"
            ));
        }
        Ok(warnings)
    }

    /// Superinductance `L_f = (Φ0/2π)^2 / (h E_L)`, nH.
    pub fn fluxonium_inductance_nh(&self) -> f64 {
        PhysicalConstants::SI.inductance_nh(self.e_l.to_f64_lossy())
    }

    /// Plasma frequency `sqrt(8 E_C E_L)` of the junction-free LC mode, GHz.
    pub fn plasma_frequency(&self) -> T {
        (T::lit(8.0) * self.e_c * self.e_l).sqrt()
    }

    /// `E_Cr = e^2/(2 C_r)` and `E_Lr = (Φ0/2π)^2/(L_r + L_s)`, both over h.
    ///
    /// With these, the resonator part of the Hamiltonian reads
    /// `4 E_Cr n_r^2 + E_Lr φ_r^2 / 2`.
    pub fn resonator_energies(&self) -> Result<ResonatorEnergies<T>> {
        let c_r = self.c_r.to_f64_lossy();
        let l_tot = (self.l_r + self.l_s).to_f64_lossy();
        if !(c_r > 0.0) || !c_r.is_finite() {
            return Err(Error::invalid(format!("C_r must be > 0, got {c_r}")));
        }
        if !(l_tot > 0.0) || !l_tot.is_finite() {
            return Err(Error::invalid(format!("L_r + L_s must be > 0, got {l_tot}")));
        }
        let k = PhysicalConstants::SI;
        Ok(ResonatorEnergies { e_cr: T::lit(k.charging_energy_ghz(c_r)), e_lr: T::lit(k.inductive_energy_ghz(l_tot)) })
    }

    /// Coefficient `g` of the `-g φ_r φ_f` coupling term, GHz:
    /// `g = E_L L_s / (2 (L_r + L_s))`.
    pub fn coupling_coefficient(&self) -> T {
        let l_tot = self.l_r + self.l_s;
        T::lit(0.5) * self.e_l * self.l_s / l_tot
    }
}

/// Energy-phase relation of the Josephson element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub enum JunctionModel<T = f64> {
    /// Tunnel junction, `-E_J cos φ`.
    Sinusoidal {
        #[serde(rename = "E_J_GHz")]
        e_j: T,
    },
    /// Ground Andreev branch of `N` channels,
    /// `-Δ Σ_i sqrt(1 - T_i sin^2(φ/2))`.
    Channels {
        #[serde(rename = "Delta_GHz")]
        delta: T,
        #[serde(rename = "T")]
        transparencies: Vec<T>,
    },
}

impl<T: Scalar> JunctionModel<T> {
    pub fn sinusoidal(e_j: T) -> Self {
        JunctionModel::Sinusoidal { e_j }
    }

    pub fn channels(delta: T, transparencies: Vec<T>) -> Self {
        JunctionModel::Channels { delta, transparencies }
    }

    pub fn cast<U: Scalar>(&self) -> JunctionModel<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        match self {
            JunctionModel::Sinusoidal { e_j } => JunctionModel::Sinusoidal { e_j: c(*e_j) },
            JunctionModel::Channels { delta, transparencies } => JunctionModel::Channels {
                delta: c(*delta),
                transparencies: transparencies.iter().map(|&t| c(t)).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JunctionModel::Sinusoidal { e_j } => {
                if !e_j.is_finite_value() || *e_j < T::zero() {
                    return Err(Error::invalid(format!("E_J must be finite and >= 0, got {}", e_j.to_f64_lossy())));
                }
            }
            JunctionModel::Channels { delta, transparencies } => {
                if !delta.is_finite_value() || *delta <= T::zero() {
                    return Err(Error::invalid(format!("Delta must be finite and > 0, got {}", delta.to_f64_lossy())));
                }
                if transparencies.is_empty() {
                    return Err(Error::invalid("channel list is empty"));
                }
                for (i, &t) in transparencies.iter().enumerate() {
                    if !t.is_finite_value() || t <= T::zero() || t > T::one() {
                        return Err(Error::invalid(format!(
                            "transparency T_{i} = {} outside (0, 1]",
                            t.to_f64_lossy()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Junction energy alone at phase `phi`, GHz. Additive constants are kept.
    #[inline]
    pub fn junction_energy(&self, phi: T) -> T {
        match self {
            JunctionModel::Sinusoidal { e_j } => -*e_j * phi.cos(),
            JunctionModel::Channels { delta, transparencies } => {
                let s = (phi * T::lit(0.5)).sin();
                let s2 = s * s;
                let sum = transparencies.iter().fold(T::zero(), |acc, &t| {
                    // clamp guards the T = 1, phi = π rounding case
                    let arg = (T::one() - t * s2).max(T::zero());
                    acc + arg.sqrt()
                });
                -*delta * sum
            }
        }
    }

    /// Low-transparency Josephson energy this junction reduces to.
    pub fn effective_ej(&self) -> Result<T> {
        match self {
            JunctionModel::Sinusoidal { e_j } => Ok(*e_j),
            JunctionModel::Channels { delta, transparencies } => effective_ej_low_transparency(*delta, transparencies),
        }
    }
}

/// Full fluxonium potential `V_J(φ) + E_L (φ - φ_ext)^2 / 2`, GHz.
pub fn potential_eval<T: Scalar>(junction: &JunctionModel<T>, e_l: T, phi: T, phi_ext: T) -> Result<T> {
    if !phi.is_finite_value() || !phi_ext.is_finite_value() {
        return Err(Error::invalid(format!(
            "non-finite phase (phi = {}, phi_ext = {})",
            phi.to_f64_lossy(),
            phi_ext.to_f64_lossy()
        )));
    }
    let d = phi - phi_ext;
    Ok(junction.junction_energy(phi) + T::lit(0.5) * e_l * d * d)
}

/// `E_J = Δ Σ T_i / 4`, the sinusoidal limit of the Andreev potential.
pub fn effective_ej_low_transparency<T: Scalar>(delta: T, transparencies: &[T]) -> Result<T> {
    if transparencies.is_empty() {
        return Err(Error::invalid("channel list is empty"));
    }
    let sum = transparencies.iter().fold(T::zero(), |a, &t| a + t);
    Ok(delta * sum * T::lit(0.25))
}

/// Metadata attached to a spectrum. Gate voltage and in-plane field are
/// labels only; each `(V_j, B_z)` point gets its own fitted `E_J`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConditions {
    #[serde(rename = "V_j", default, skip_serializing_if = "Option::is_none")]
    pub v_j: Option<f64>,
    #[serde(rename = "B_z", default, skip_serializing_if = "Option::is_none")]
    pub b_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_ext: Option<f64>,
}
