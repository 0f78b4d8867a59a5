//! Flux-dependent spectra of a fluxonium and of the coupled
//! fluxonium-resonator circuit, peak extraction from two-tone spectroscopy
//! scans, and simultaneous fitting of many spectra.
//!
//! The physics modules ([`circuit`], [`hamiltonian`]) are generic over the
//! floating point type through [`Scalar`]; the aliases below fix it to `f64`
//! (the default everywhere) or `f32`. Data handling ([`spectroscopy`]) and
//! fitting ([`fitter`]) work in `f64`.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod fitter;
pub mod hamiltonian;
pub mod optim;
pub mod scalar;
pub mod spectroscopy;

pub use circuit::{
    effective_ej_low_transparency, potential_eval, CircuitParams, JunctionModel, PhysicalConstants, ResonatorEnergies,
    SpectrumConditions,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    BasisSpec, BuildOptions, CouplingGauge, ModelKind, SpectrumResult, SpectrumSolver, StateLabel, Transition,
};
pub use scalar::Scalar;

pub type CircuitParamsF64 = CircuitParams<f64>;
pub type CircuitParamsF32 = CircuitParams<f32>;
pub type JunctionModelF64 = JunctionModel<f64>;
pub type JunctionModelF32 = JunctionModel<f32>;
pub type SpectrumSolverF64 = SpectrumSolver<f64>;
pub type SpectrumSolverF32 = SpectrumSolver<f32>;
pub type SpectrumResultF64 = SpectrumResult<f64>;
pub type SpectrumResultF32 = SpectrumResult<f32>;
