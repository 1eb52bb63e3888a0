//! Time-domain simulation of a dipole emitter next to a gold nanorod on a
//! silica nanofiber, with the guided-mode and spectral post-processing
//! needed to turn monitor data into Purcell factors, polarization and
//! fiber-coupled intensity enhancement.
//!
//! Field kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the precision for the common cases.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fdtd;
pub mod fiber;
pub mod geometry;
pub mod monitors;
pub mod observables;
pub mod runner;
pub mod scalar;
pub mod units;

pub use fdtd::{courant_dt, step, Axis, CpmlParams, DipoleSource, DrudeLorentzModel, FdtdError, YeeGrid};
pub use geometry::{paper_scene, paper_scene_with, rasterize, MaterialMap, SceneConfig, SceneOptions, Shape};
pub use monitors::{DftMonitor, MonitorSet, Spectrum, Termination};
pub use observables::{
    dop_from_triple, dop_weighted, intensity_enhancement, max_purcell, purcell_spectrum, CouplingTriple,
    EmitterCoupling, ObservablesResult, PurcellSpectrum, QdSpectrum, RunSummary,
};
pub use runner::{run, vacuum_reference, RunError, Simulation};
pub use scalar::Real;

pub type FieldState32 = fdtd::FieldState<f32>;
pub type FieldState64 = fdtd::FieldState<f64>;
pub type MaterialMap32 = MaterialMap<f32>;
pub type MaterialMap64 = MaterialMap<f64>;
pub type Simulation32 = Simulation<f32>;
pub type Simulation64 = Simulation<f64>;
