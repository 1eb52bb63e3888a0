//! Yee-grid FDTD engine with CPML boundaries and Drude–Lorentz media.

pub mod cpml;
pub mod engine;
pub mod grid;
pub mod material;
pub mod source;

use thiserror::Error;

pub use cpml::{CpmlFields, CpmlParams, CpmlProfile};
pub use engine::{step, FieldState, SourceDrive};
pub use grid::{courant_dt, Axis, Component, YeeGrid};
pub use material::{DrudeLorentzModel, DrudeTerm, LorentzPole};
pub use source::{DipoleSource, Pulse, SourceStencil};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdtdError {
    #[error("non-finite field detected at step {step}")]
    NonFinite { step: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
