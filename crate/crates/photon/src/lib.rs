//! Photon-counting analysis for a fiber-coupled single emitter: two-channel
//! timestamp streams, g²(τ) histograms, antibunching and excitation-power
//! fits, lifetime ratios, half-wave-plate polarization scans, and a Monte
//! Carlo source of synthetic streams to test them against.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlate;
pub mod fit;
pub mod hwp;
pub mod stream;
pub mod synth;

pub use correlate::{correlate, CorrelationHistogram};
pub use fit::{
    fit_antibunching, fit_antibunching_with, fit_power_dependence, purcell_from_lifetimes, AntibunchFit,
    FitOptions, PowerFit, PowerPoint, PowerSeries,
};
pub use hwp::{dop_from_hwp_scan, HwpFit, HwpScan};
pub use stream::{Channel, Event, StreamMetadata, TimestampStream};
pub use synth::{generate_stream, synthesize_hwp_scan, DetectorModel, EmitterModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhotonError {
    #[error("channel {0:?} has no events")]
    EmptyChannel(Channel),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("events out of order at index {0}")]
    Unsorted(usize),
    #[error("fit did not converge: {0}")]
    NoConvergence(String),
    #[error("histogram is flat; the rise time is not identifiable")]
    DegenerateHistogram,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("scan covers {0:.1} deg of HWP angle, need 90")]
    InsufficientCoverage(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PhotonError>;
