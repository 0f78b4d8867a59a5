use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, JunctionModel, SpectrumConditions};
use crate::error::{Error, Result};

/// A fit parameter: value, optional bounds, frozen flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default)]
    pub frozen: bool,
}

impl Param {
    pub fn free(value: f64, lower: f64, upper: f64) -> Self {
        Self { value, lower: Some(lower), upper: Some(upper), frozen: false }
    }

    pub fn fixed(value: f64) -> Self {
        Self { value, lower: None, upper: None, frozen: true }
    }

    /// Bounds intersected with the physical `domain`.
    fn bounds(&self, domain: (f64, f64)) -> (f64, f64) {
        let lo = self.lower.unwrap_or(f64::NEG_INFINITY).max(domain.0);
        let hi = self.upper.unwrap_or(f64::INFINITY).min(domain.1);
        (lo, hi)
    }
}

fn unit() -> Param {
    Param::fixed(1.0)
}

/// Device parameters common to all spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedParams {
    #[serde(rename = "E_C_GHz")]
    pub e_c: Param,
    #[serde(rename = "E_L_GHz")]
    pub e_l: Param,
    #[serde(rename = "L_r_nH")]
    pub l_r: Param,
    #[serde(rename = "L_s_nH")]
    pub l_s: Param,
}

/// Parameters never fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    #[serde(rename = "C_r_fF")]
    pub c_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum JunctionLayout {
    Sinusoidal {
        #[serde(rename = "E_J_GHz")]
        e_j: Param,
    },
    /// `delta: None` uses the layout's shared gap.
    Channels {
        #[serde(rename = "Delta_GHz", default, skip_serializing_if = "Option::is_none")]
        delta: Option<Param>,
        #[serde(rename = "T")]
        transparencies: Vec<Param>,
    },
}

/// Parameters belonging to one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLayout {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub conditions: SpectrumConditions,
    pub junction: JunctionLayout,
    /// Model phase is `flux_period_scale * x + phi_offset`.
    pub phi_offset: Param,
    #[serde(default = "unit")]
    pub flux_period_scale: Param,
}

/// Shared, fixed and per-spectrum parameters of a simultaneous fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub shared: SharedParams,
    pub fixed: FixedParams,
    /// Gap shared by every channels junction that has no own `Delta_GHz`.
    #[serde(rename = "Delta_GHz", default, skip_serializing_if = "Option::is_none")]
    pub shared_delta: Option<Param>,
    pub spectra: Vec<SpectrumLayout>,
}

/// Physical domain of each parameter kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Energy,
    NonNegEnergy,
    Inductance,
    NonNegInductance,
    Transparency,
    Phase,
    Scale,
}

impl Kind {
    fn domain(self) -> (f64, f64) {
        match self {
            Kind::Energy => (1e-6, f64::INFINITY),
            Kind::NonNegEnergy => (0.0, f64::INFINITY),
            Kind::Inductance => (1e-6, f64::INFINITY),
            Kind::NonNegInductance => (0.0, f64::INFINITY),
            Kind::Transparency => (1e-9, 1.0),
            Kind::Phase => (f64::NEG_INFINITY, f64::INFINITY),
            Kind::Scale => (1e-6, f64::INFINITY),
        }
    }
}

/// Physical values of one spectrum at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumValues {
    pub params: CircuitParams,
    pub junction: JunctionModel,
    pub phi_offset: f64,
    pub flux_period_scale: f64,
}

impl SpectrumValues {
    pub fn model_phase(&self, x: f64) -> f64 {
        self.flux_period_scale * x + self.phi_offset
    }
}

impl ParameterLayout {
    /// Every parameter in canonical order with its name and kind.
    fn entries(&self) -> Vec<(String, Param, Kind)> {
        let mut out = vec![
            ("E_C".to_string(), self.shared.e_c, Kind::Energy),
            ("E_L".to_string(), self.shared.e_l, Kind::Energy),
            ("L_r".to_string(), self.shared.l_r, Kind::Inductance),
            ("L_s".to_string(), self.shared.l_s, Kind::NonNegInductance),
        ];
        if let Some(d) = self.shared_delta {
            out.push(("Delta".to_string(), d, Kind::Energy));
        }
        for (i, s) in self.spectra.iter().enumerate() {
            match &s.junction {
                JunctionLayout::Sinusoidal { e_j } => out.push((format!("spectra[{i}].E_J"), *e_j, Kind::NonNegEnergy)),
                JunctionLayout::Channels { delta, transparencies } => {
                    if let Some(d) = delta {
                        out.push((format!("spectra[{i}].Delta"), *d, Kind::Energy));
                    }
                    for (k, t) in transparencies.iter().enumerate() {
                        out.push((format!("spectra[{i}].T[{k}]"), *t, Kind::Transparency));
                    }
                }
            }
            out.push((format!("spectra[{i}].phi_offset"), s.phi_offset, Kind::Phase));
            out.push((format!("spectra[{i}].flux_period_scale"), s.flux_period_scale, Kind::Scale));
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = vec![&mut self.shared.e_c, &mut self.shared.e_l, &mut self.shared.l_r, &mut self.shared.l_s];
        if let Some(d) = self.shared_delta.as_mut() {
            out.push(d);
        }
        for s in &mut self.spectra {
            match &mut s.junction {
                JunctionLayout::Sinusoidal { e_j } => out.push(e_j),
                JunctionLayout::Channels { delta, transparencies } => {
                    if let Some(d) = delta.as_mut() {
                        out.push(d);
                    }
                    out.extend(transparencies.iter_mut());
                }
            }
            out.push(&mut s.phi_offset);
            out.push(&mut s.flux_period_scale);
        }
        out
    }

    /// Names of all parameters in canonical order.
    pub fn parameter_names(&self) -> Vec<String> {
        self.entries().into_iter().map(|e| e.0).collect()
    }

    /// `(name, value, frozen)` of every parameter in canonical order.
    pub fn named_values(&self) -> Vec<(String, f64, bool)> {
        self.entries().into_iter().map(|e| (e.0, e.1.value, e.1.frozen)).collect()
    }

    /// Names of the free parameters, in the order of the fit vector.
    pub fn free_names(&self) -> Vec<String> {
        self.entries().into_iter().filter(|e| !e.1.frozen).map(|e| e.0).collect()
    }

    /// Current values of the free parameters.
    pub fn free_values(&self) -> Vec<f64> {
        self.entries().into_iter().filter(|e| !e.1.frozen).map(|e| e.1.value).collect()
    }

    /// Bounds of the free parameters, intersected with physical domains.
    pub fn free_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.entries().into_iter().filter(|e| !e.1.frozen).map(|e| e.1.bounds(e.2.domain())).unzip()
    }

    /// Copy with the free parameters replaced by `values`.
    pub fn with_free_values(&self, values: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        let mut free: Vec<&mut Param> = out.params_mut().into_iter().filter(|p| !p.frozen).collect();
        if free.len() != values.len() {
            return Err(Error::Config(format!("expected {} free values, got {}", free.len(), values.len())));
        }
        for (p, &v) in free.iter_mut().zip(values) {
            p.value = v;
        }
        Ok(out)
    }

    /// Freezes every parameter whose full name, or last component, equals
    /// `pattern` (`"Delta"` matches the shared gap and every per-spectrum
    /// gap). With `value`, the parameter is also set to it.
    pub fn freeze(&mut self, pattern: &str, value: Option<f64>) -> Result<usize> {
        let names = self.parameter_names();
        let mut hits = 0;
        for (name, p) in names.iter().zip(self.params_mut()) {
            let last = name.rsplit('.').next().unwrap_or(name);
            let base = last.split('[').next().unwrap_or(last);
            if name == pattern || last == pattern || base == pattern {
                if let Some(v) = value {
                    p.value = v;
                }
                p.frozen = true;
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::Config(format!("no parameter matches {pattern:?}; known: {}", names.join(", "))));
        }
        Ok(hits)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fixed.c_r > 0.0) {
            return Err(Error::Config(format!("C_r must be > 0, got {}", self.fixed.c_r)));
        }
        if self.spectra.is_empty() {
            return Err(Error::Config("layout has no spectra".into()));
        }
        for (name, p, kind) in self.entries() {
            let (lo, hi) = p.bounds(kind.domain());
            if !p.value.is_finite() {
                return Err(Error::Config(format!("{name} value is not finite")));
            }
            if !p.frozen && !(lo <= p.value && p.value <= hi) {
                return Err(Error::Config(format!("{name} = {} outside its bounds [{lo}, {hi}]", p.value)));
            }
        }
        for (i, s) in self.spectra.iter().enumerate() {
            if let JunctionLayout::Channels { delta, transparencies } = &s.junction {
                if delta.is_none() && self.shared_delta.is_none() {
                    return Err(Error::Config(format!("spectra[{i}] has a channels junction but no Delta")));
                }
                if transparencies.is_empty() {
                    return Err(Error::Config(format!("spectra[{i}] has no channels")));
                }
            }
        }
        if self.free_names().is_empty() {
            return Err(Error::Config("every parameter is frozen".into()));
        }
        Ok(())
    }

    /// Physical parameters of spectrum `i`.
    pub fn spectrum_values(&self, i: usize) -> Result<SpectrumValues> {
        let s = self.spectra.get(i).ok_or_else(|| Error::Config(format!("no spectrum {i} in layout")))?;
        let params = CircuitParams::new(
            self.shared.e_c.value,
            self.shared.e_l.value,
            self.fixed.c_r,
            self.shared.l_r.value,
            self.shared.l_s.value,
        );
        let junction = match &s.junction {
            JunctionLayout::Sinusoidal { e_j } => JunctionModel::sinusoidal(e_j.value),
            JunctionLayout::Channels { delta, transparencies } => {
                let d =
                    delta.or(self.shared_delta).ok_or_else(|| Error::Config(format!("spectra[{i}] has no Delta")))?;
                JunctionModel::channels(d.value, transparencies.iter().map(|t| t.value).collect())
            }
        };
        Ok(SpectrumValues {
            params,
            junction,
            phi_offset: s.phi_offset.value,
            flux_period_scale: s.flux_period_scale.value,
        })
    }

    /// Layout with one sinusoidal spectrum per entry of `e_j`, shared
    /// parameters free within broad bounds, `L_r`, `L_s` frozen at the
    /// design values and offsets free.
    pub fn sinusoidal(design: &CircuitParams, e_j: &[f64]) -> Self {
        ParameterLayout {
            shared: SharedParams {
                e_c: Param::free(design.e_c, 0.05, 50.0),
                e_l: Param::free(design.e_l, 0.01, 20.0),
                l_r: Param::fixed(design.l_r),
                l_s: Param::fixed(design.l_s),
            },
            fixed: FixedParams { c_r: design.c_r },
            shared_delta: None,
            spectra: e_j
                .iter()
                .enumerate()
                .map(|(i, &e)| SpectrumLayout {
                    name: format!("spectrum{i}"),
                    conditions: SpectrumConditions::default(),
                    junction: JunctionLayout::Sinusoidal { e_j: Param::free(e, 0.0, 60.0) },
                    phi_offset: Param::free(0.0, -2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI),
                    flux_period_scale: unit(),
                })
                .collect(),
        }
    }
}
