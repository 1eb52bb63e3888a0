//! Library half of the `plasmofiber` command: configuration, FDTD sweep
//! orchestration and the photon-statistics analysis and synthesis drivers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};

use photon_stats::PhotonError;
use plasmofiber::fiber::FiberError;
use plasmofiber::geometry::GeometryError;
use plasmofiber::observables::ObservablesError;
use plasmofiber::RunError;
use thiserror::Error;

pub use config::RunConfig;

/// Environment variable overriding the number of compute threads.
pub const THREADS_ENV: &str = "PLASMOFIBER_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: parse error at byte {offset}: {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    #[error(transparent)]
    Photon(#[from] PhotonError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Writes through a temporary sibling and renames, so an interrupted
/// process never leaves a truncated file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Sizes the global compute pool from [`THREADS_ENV`] when set. Returns the
/// thread count in effect.
pub fn init_threads() -> Result<usize, CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
        // Fails only if the pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
