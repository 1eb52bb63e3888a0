//! Drives a scene from rasterization to accumulated monitors.

use thiserror::Error;

use crate::fdtd::{step, CpmlProfile, FdtdError, FieldState, SourceDrive, YeeGrid};
use crate::geometry::{rasterize, GeometryError, MaterialMap, MonitorSpec, SceneConfig, RADIATION_BOX};
use crate::monitors::{MonitorSet, Termination};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Step cap reached before the field decayed; monitors are still returned.
    #[error("step cap of {} reached before field decay", .0.steps)]
    NotConverged(Box<MonitorSet>),
}

/// A scene bound to its fields, materials and monitors.
pub struct Simulation<T> {
    pub scene: SceneConfig,
    pub materials: MaterialMap<T>,
    pub cpml: CpmlProfile<T>,
    pub state: FieldState<T>,
    pub sources: Vec<SourceDrive>,
    pub monitors: MonitorSet,
}

impl<T: Real> Simulation<T> {
    pub fn new(scene: &SceneConfig) -> Result<Self, RunError> {
        let materials = rasterize::<T>(scene)?;
        let grid = &scene.grid;
        let safety = scene.run.courant_safety;
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(FdtdError::InvalidParameter(format!(
                "Courant safety {safety} outside (0, 1]"
            ))
            .into());
        }
        let dt = grid.courant_dt_internal(safety);
        let cpml = CpmlProfile::new(&scene.cpml, grid, dt)?;
        let state = FieldState::new(grid, &materials, &cpml, dt)?;
        let sources = vec![SourceDrive::new(grid, &scene.dipole)?];
        let monitors = MonitorSet::new(scene, &materials, dt)?;
        Ok(Self {
            scene: scene.clone(),
            materials,
            cpml,
            state,
            sources,
            monitors,
        })
    }

    /// One leapfrog cycle plus monitor accumulation.
    pub fn advance(&mut self) -> Result<(), FdtdError> {
        step(&mut self.state, &self.materials, &self.cpml, &self.sources)?;
        self.monitors.accumulate(&self.state, &self.materials);
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.state.energy(&self.materials)
    }

    /// Steps until the energy has decayed below the configured fraction of
    /// its peak (checked only after the source has switched off) or the step
    /// cap is reached.
    pub fn run(mut self) -> Result<MonitorSet, RunError> {
        let ctl = self.scene.run.clone();
        let source_end = self.scene.dipole.pulse.end_time();
        let check = ctl.check_interval.max(1);
        let mut peak = 0.0f64;
        let mut last = 0.0;
        let mut decayed = false;
        while self.state.step < ctl.max_steps {
            self.advance()?;
            if self.state.step.is_multiple_of(check) {
                let e = self.energy();
                if !e.is_finite() {
                    return Err(FdtdError::NonFinite {
                        step: self.state.step,
                    }
                    .into());
                }
                peak = peak.max(e);
                last = e;
                if self.state.time() > source_end && peak > 0.0 && e < ctl.decay_threshold * peak {
                    decayed = true;
                    break;
                }
            }
        }
        let mut m = self.monitors;
        m.steps = self.state.step;
        m.peak_energy = peak;
        m.final_energy = last;
        if decayed {
            m.termination = Some(Termination::Decayed);
            Ok(m)
        } else {
            m.termination = Some(Termination::StepCap);
            Err(RunError::NotConverged(Box::new(m)))
        }
    }
}

/// Runs a scene to completion with scalar type `T`.
pub fn run<T: Real>(scene: &SceneConfig) -> Result<MonitorSet, RunError> {
    Simulation::<T>::new(scene)?.run()
}

/// Compact vacuum scene for Purcell normalization: same resolution, pulse,
/// wavelengths and sub-cell dipole offset as `scene`, `half_width_nm` of
/// free space around the dipole.
pub fn vacuum_reference(scene: &SceneConfig, half_width_nm: f64) -> Result<SceneConfig, RunError> {
    let g = &scene.grid;
    let p = scene.dipole.position;
    let res = g.resolution;
    let mut anchor = [0.0; 3];
    for a in 0..3 {
        let n = ((p[a] - g.origin[a]) / res).floor();
        anchor[a] = g.origin[a] + n * res;
    }
    let lo = p.map(|x| x - half_width_nm);
    let hi = p.map(|x| x + half_width_nm);
    let grid = YeeGrid::covering(lo, hi, res, scene.cpml.thickness + 5, anchor)?;
    let m = 0.5 * half_width_nm;
    let mut vac = SceneConfig::vacuum(grid, scene.dipole.clone());
    vac.monitors = vec![MonitorSpec::FluxBox {
        name: RADIATION_BOX.into(),
        lo: p.map(|x| x - m),
        hi: p.map(|x| x + m),
    }];
    vac.wavelengths = scene.wavelengths.clone();
    vac.cpml = scene.cpml.clone();
    vac.run = scene.run.clone();
    Ok(vac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdtd::DipoleSource;

    #[test]
    fn step_cap_flags_non_convergence() {
        let grid = YeeGrid::new([36, 36, 36], 10.0, [-175.0; 3]).unwrap();
        let mut scene = SceneConfig::vacuum(grid, DipoleSource::new([2.0, 1.0, 0.0], [0.0, 0.0, 1.0]));
        scene.run.max_steps = 10;
        match run::<f64>(&scene) {
            Err(RunError::NotConverged(m)) => {
                assert_eq!(m.steps, 10);
                assert_eq!(m.termination, Some(Termination::StepCap));
            }
            other => panic!("expected NotConverged, got {:?}", other.map(|m| m.steps)),
        }
    }

    #[test]
    fn reference_keeps_subcell_offset() {
        let grid = YeeGrid::new([60, 60, 60], 5.0, [-150.0; 3]).unwrap();
        let scene = SceneConfig::vacuum(grid.clone(), DipoleSource::new([1.3, -2.2, 3.9], [1.0, 0.0, 0.0]));
        let vac = vacuum_reference(&scene, 100.0).unwrap();
        for a in 0..3 {
            let f = |g: &YeeGrid| ((scene.dipole.position[a] - g.origin[a]) / 5.0).rem_euclid(1.0);
            assert!((f(&grid) - f(&vac.grid)).abs() < 1e-9);
        }
    }
}
