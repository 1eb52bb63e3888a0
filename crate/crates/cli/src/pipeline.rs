//! FDTD orchestration: cached reference runs, sweep points and the sweep
//! driver.
//!
//! Every run is stored under `cache/` as a [`RunSummary`] keyed by a SHA-256
//! of its full scene description, so vacuum and bare-fiber references are
//! shared between points and a restarted sweep redoes no finished work.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use plasmofiber::fdtd::Axis;
use plasmofiber::fiber::{solve_he11_grid, FiberSpec};
use plasmofiber::geometry::MonitorSpec;
use plasmofiber::observables::purcell_from_summaries;
use plasmofiber::{
    max_purcell, paper_scene_with, run, vacuum_reference, CouplingTriple, EmitterCoupling, ObservablesResult,
    PurcellSpectrum, QdSpectrum, RunError, RunSummary, SceneConfig,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Precision, RunConfig, SceneParams};
use crate::{write_atomic, CliError};

/// Bumped whenever the meaning of a cached summary changes.
const CACHE_VERSION: u32 = 1;

/// Run cache with one lock per key, so concurrent points wait for a shared
/// reference instead of computing it twice.
pub struct RunCache {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    scene: &'a SceneConfig,
    precision: Precision,
    project_modes: bool,
}

impl RunCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn key(scene: &SceneConfig, precision: Precision, project_modes: bool) -> String {
        let key = CacheKey {
            version: CACHE_VERSION,
            scene,
            precision,
            project_modes,
        };
        let bytes = serde_json::to_vec(&key).expect("scenes serialize");
        format!("{:x}", Sha256::digest(bytes))
    }

    pub fn contains(&self, scene: &SceneConfig, precision: Precision, project_modes: bool) -> bool {
        self.dir.join(format!("{}.json", Self::key(scene, precision, project_modes))).exists()
    }

    /// Cached summary of `scene`, running it first if needed. Guided
    /// fractions are projected when `project_modes` is set.
    pub fn summary(&self, scene: &SceneConfig, precision: Precision, project_modes: bool) -> Result<RunSummary, CliError> {
        let key = Self::key(scene, precision, project_modes);
        let lock = self.locks.lock().unwrap().entry(key.clone()).or_default().clone();
        let _held = lock.lock().unwrap();
        let path = self.dir.join(format!("{key}.json"));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(s) = serde_json::from_str(&text) {
                return Ok(s);
            }
        }
        let s = run_summary(scene, precision, project_modes)?;
        write_atomic(&path, serde_json::to_string(&s)?.as_bytes())?;
        Ok(s)
    }
}

/// Runs one scene. A run stopped by the step cap still yields its monitors;
/// the summary records that it did not decay.
pub fn run_summary(scene: &SceneConfig, precision: Precision, project_modes: bool) -> Result<RunSummary, CliError> {
    let monitors = match precision {
        Precision::F32 => run::<f32>(scene),
        Precision::F64 => run::<f64>(scene),
    };
    let monitors = match monitors {
        Ok(m) => m,
        Err(RunError::NotConverged(m)) => {
            eprintln!("warning: step cap of {} reached before field decay", m.steps);
            *m
        }
        Err(e) => return Err(e.into()),
    };
    if project_modes {
        let diameter = scene
            .fiber_diameter
            .ok_or_else(|| CliError::Config("mode projection needs a fiber".into()))?;
        let modes = solve_he11_grid(&FiberSpec::simulated(diameter), &scene.wavelengths)?;
        Ok(RunSummary::from_run(&monitors, Some((&modes, plane_distance(scene))))?)
    } else {
        Ok(RunSummary::from_run(&monitors, None)?)
    }
}

/// Distance from the nearer mode plane to the dipole.
fn plane_distance(scene: &SceneConfig) -> Option<f64> {
    let z = scene.dipole.position[2];
    scene
        .monitors
        .iter()
        .filter_map(|m| match m {
            MonitorSpec::FluxPlane { axis: Axis::Z, position, .. } => Some((position - z).abs()),
            _ => None,
        })
        .reduce(f64::min)
}

/// Vacuum reference for `scene`, translated so the dipole sits inside the
/// cell at the origin. Scenes whose dipoles share a sub-cell offset and
/// orientation then hash to the same reference.
pub fn vacuum_scene(scene: &SceneConfig, half_width_nm: f64) -> Result<SceneConfig, CliError> {
    let mut vac = vacuum_reference(scene, half_width_nm)?;
    let res = vac.grid.resolution;
    let p = vac.dipole.position;
    // Node at or below the dipole; snap the remainder so float noise does not split the cache.
    let shift = [0, 1, 2].map(|a| vac.grid.origin[a] + ((p[a] - vac.grid.origin[a]) / res + 1e-9).floor() * res);
    let snap = |x: f64| (x * 1e6).round() / 1e6;
    for a in 0..3 {
        vac.grid.origin[a] = snap(vac.grid.origin[a] - shift[a]);
        vac.dipole.position[a] = snap(p[a] - shift[a]);
    }
    for m in &mut vac.monitors {
        if let MonitorSpec::FluxBox { lo, hi, .. } = m {
            for a in 0..3 {
                lo[a] = snap(lo[a] - shift[a]);
                hi[a] = snap(hi[a] - shift[a]);
            }
        }
    }
    Ok(vac)
}

/// Scene for one orientation, rod present when `rod_length` is given.
pub fn point_scene(p: &SceneParams, d: f64, rod_length: Option<f64>, orientation: [f64; 3]) -> Result<SceneConfig, CliError> {
    Ok(paper_scene_with(d, rod_length, p.fiber_diameter_nm, orientation, &p.scene_options())?)
}

/// Couplings and Purcell spectra for `[x, y, z]` dipoles in one geometry.
pub fn orientation_triple(
    cache: &RunCache,
    p: &SceneParams,
    d: f64,
    rod_length: Option<f64>,
) -> Result<(EmitterCoupling, bool), CliError> {
    let mut runs = Vec::with_capacity(3);
    let mut vac = Vec::with_capacity(3);
    for axis in Axis::ALL {
        let scene = point_scene(p, d, rod_length, axis.unit())?;
        vac.push(cache.summary(&vacuum_scene(&scene, p.vacuum_half_width_nm)?, p.precision, false)?);
        runs.push(cache.summary(&scene, p.precision, true)?);
    }
    let decayed = runs.iter().chain(&vac).all(|r| r.decayed);
    // Each orientation is normalized by its own vacuum run.
    let mut t: [Vec<f64>; 3] = Default::default();
    let mut f = Vec::with_capacity(3);
    for i in 0..3 {
        let g = runs[i]
            .guided_fraction
            .as_ref()
            .ok_or_else(|| CliError::Config("run lacks guided fractions".into()))?;
        t[i] = g.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        f.push(purcell_from_summaries(&runs[i], &vac[i])?);
    }
    let purcell: [PurcellSpectrum; 3] = f.try_into().expect("three orientations");
    let coupling = CouplingTriple::new(runs[0].wavelengths.clone(), t)?;
    Ok((EmitterCoupling::new(coupling, purcell)?, decayed))
}

/// Everything written for one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub result: ObservablesResult,
    /// All runs of the point and its references ended by field decay.
    pub converged: bool,
    pub coupled: EmitterCoupling,
    pub bare: EmitterCoupling,
}

pub fn compute_point(cfg: &RunConfig, cache: &RunCache, d: f64, rod_length: f64) -> Result<PointRecord, CliError> {
    let p = &cfg.scene;
    let (bare, bare_ok) = orientation_triple(cache, p, 0.0, None)?;
    let (coupled, rod_ok) = orientation_triple(cache, p, d, Some(rod_length))?;
    let qd = QdSpectrum::gaussian(cfg.qd.center_nm, cfg.qd.fwhm_nm, &coupled.coupling.wavelengths)?;
    let result = ObservablesResult::compute(d, Some(rod_length), p.resolution_nm, &coupled, &bare, &qd)?;
    Ok(PointRecord {
        result,
        converged: bare_ok && rod_ok,
        coupled,
        bare,
    })
}

/// Per-wavelength spectra of a point, one row per wavelength.
pub fn write_point_spectra(rec: &PointRecord, qd: &QdSpectrum, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "wavelength_nm", "qd_weight", "T_x", "T_y", "T_z", "F_x", "F_y", "F_z", "bare_T_x", "bare_T_y", "bare_T_z",
        "bare_F_x", "bare_F_y", "bare_F_z",
    ])?;
    let (c, b) = (&rec.coupled, &rec.bare);
    for (i, l) in c.coupling.wavelengths.iter().enumerate() {
        let mut row = vec![*l, qd.weights[i]];
        for e in [c, b] {
            row.extend((0..3).map(|k| e.coupling.t[k][i]));
            row.extend((0..3).map(|k| e.purcell[k].total[i]));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn point_dir(out: &Path, d: f64, rod_length: f64) -> PathBuf {
    out.join("points").join(format!("L{rod_length}_d{d}"))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub computed: usize,
    pub skipped: usize,
    pub failed: Vec<(f64, f64, String)>,
    pub rows: usize,
}

/// A point's record or error, and whether it was computed in this call.
type PointOutcome = (Result<PointRecord, String>, bool);

/// Runs or resumes a sweep. Finished points (those with a `result.json`)
/// are reused; failures are recorded and the remaining points still run.
/// The aggregated `sweep.csv` is rebuilt in sweep order at the end.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let cache = RunCache::new(out.join("cache"))?;
    let points: Vec<(f64, f64)> = cfg
        .sweep
        .rod_length_nm
        .iter()
        .flat_map(|&l| cfg.sweep.d_nm.iter().map(move |&d| (d, l)))
        .collect();

    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<PointOutcome>>> = Mutex::new(vec![None; points.len()]);
    let workers = cfg.sweep.workers.clamp(1, points.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(d, l)) = points.get(i) else { break };
                let outcome = sweep_point(cfg, &cache, d, l);
                outcomes.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut report = SweepReport::default();
    let mut rows = Vec::new();
    for ((d, l), o) in points.iter().zip(outcomes.into_inner().unwrap()) {
        match o.expect("every point visited") {
            (Ok(rec), reused) => {
                if reused {
                    report.skipped += 1;
                } else {
                    report.computed += 1;
                }
                rows.push(rec.result);
            }
            (Err(e), _) => report.failed.push((*d, *l, e)),
        }
    }
    report.rows = rows.len();
    let mut csv = Vec::new();
    ObservablesResult::write_csv(&rows, &mut csv)?;
    write_atomic(&out.join("sweep.csv"), &csv)?;
    let failures = out.join("failures.csv");
    if report.failed.is_empty() {
        let _ = fs::remove_file(&failures);
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["d_nm", "L_nm", "error"])?;
        for (d, l, e) in &report.failed {
            w.write_record([d.to_string(), l.to_string(), e.clone()])?;
        }
        write_atomic(&failures, &w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)?;
    }
    Ok(report)
}

/// One point: reuse its record if present, otherwise compute and write it.
/// The flag is true when the record was reused.
fn sweep_point(cfg: &RunConfig, cache: &RunCache, d: f64, l: f64) -> (Result<PointRecord, String>, bool) {
    let dir = point_dir(&cfg.output_dir, d, l);
    let result_path = dir.join("result.json");
    if let Some(rec) = fs::read_to_string(&result_path)
        .ok()
        .and_then(|t| serde_json::from_str::<PointRecord>(&t).ok())
    {
        return (Ok(rec), true);
    }
    eprintln!("point d = {d} nm, L = {l} nm");
    let attempt = || -> Result<PointRecord, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let rec = compute_point(cfg, cache, d, l)?;
        let qd = QdSpectrum::gaussian(cfg.qd.center_nm, cfg.qd.fwhm_nm, &rec.coupled.coupling.wavelengths)?;
        write_point_spectra(&rec, &qd, &dir.join("spectra.csv"))?;
        // Written last: its presence marks the point complete.
        write_atomic(&result_path, serde_json::to_string_pretty(&rec)?.as_bytes())?;
        Ok(rec)
    };
    match attempt() {
        Ok(rec) => {
            let _ = fs::remove_file(dir.join("error.txt"));
            (Ok(rec), false)
        }
        Err(e) => {
            let msg = e.to_string();
            let _ = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join("error.txt"), &msg));
            (Err(msg), false)
        }
    }
}

/// Result of a single `simulate` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub d_nm: f64,
    pub rod_length_nm: Option<f64>,
    pub orientation: [f64; 3],
    pub resolution_nm: f64,
    pub steps: usize,
    pub decayed: bool,
    pub max_purcell: f64,
    pub lambda_at_max_nm: f64,
    /// Emitter-spectrum averaged guided fraction.
    pub coupling: f64,
}

/// One scene with the configured orientation, normalized by its vacuum
/// reference. Writes `spectra.csv` and `report.json` under `output_dir`.
pub fn simulate(cfg: &RunConfig) -> Result<SimulationReport, CliError> {
    cfg.validate()?;
    let p = &cfg.scene;
    let out = &cfg.output_dir;
    let cache = RunCache::new(out.join("cache"))?;
    let orientation = p.orientation.unit()?;
    let scene = point_scene(p, p.d_nm, p.rod_length_nm, orientation)?;
    let vac = cache.summary(&vacuum_scene(&scene, p.vacuum_half_width_nm)?, p.precision, false)?;
    let run = cache.summary(&scene, p.precision, true)?;
    let f = purcell_from_summaries(&run, &vac)?;
    let t: Vec<f64> = run.guided_fraction.clone().unwrap_or_default();
    let qd = QdSpectrum::gaussian(cfg.qd.center_nm, cfg.qd.fwhm_nm, &run.wavelengths)?;
    let guided: Vec<f64> = t.iter().zip(&f.total).map(|(t, f)| t * f).collect();
    let (fmax, lmax) = max_purcell(&f);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["wavelength_nm", "purcell", "radiative_efficiency", "guided_fraction", "source_power"])?;
    for i in 0..run.wavelengths.len() {
        let eta = f.radiative_efficiency.as_ref().map_or(f64::NAN, |r| r[i]);
        w.write_record([run.wavelengths[i], f.total[i], eta, t[i], run.source_power[i]].map(|v| v.to_string()))?;
    }
    write_atomic(&out.join("spectra.csv"), &w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)?;
    let report = SimulationReport {
        d_nm: p.d_nm,
        rod_length_nm: p.rod_length_nm,
        orientation,
        resolution_nm: p.resolution_nm,
        steps: run.steps,
        decayed: run.decayed && vac.decayed,
        max_purcell: fmax,
        lambda_at_max_nm: lmax,
        coupling: qd.average(&guided) / qd.average(&f.total),
    };
    write_atomic(&out.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}
