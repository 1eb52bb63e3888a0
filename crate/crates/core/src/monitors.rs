//! Running DFT monitors: flux planes and boxes, point probes, source power
//! and absorbed power in dispersive media.
//!
//! Every monitor accumulates `Σ f(t) e^{iωt} Δt_s` with each field sampled at
//! its own time (E at `nΔt`, H and currents at `(n - ½)Δt`).

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fdtd::{Axis, Component, DipoleSource, FieldState, SourceStencil, YeeGrid};
use crate::fdtd::engine::current_at;
use crate::fdtd::source::trilinear_stencil;
use crate::fdtd::FdtdError;
use crate::geometry::{MaterialMap, MonitorSpec, SceneConfig};
use crate::scalar::Real;
use crate::units::omega_internal;

/// Cells kept between a flux surface and the CPML.
pub const CPML_CLEARANCE: usize = 4;

/// Real values on a wavelength grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub wavelengths: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelengths: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(wavelengths.len(), values.len());
        Self {
            wavelengths,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.wavelengths.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination; panics if the wavelength grids differ.
    pub fn zip_with(&self, other: &Spectrum, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.wavelengths, other.wavelengths, "wavelength grids differ");
        Self::new(
            self.wavelengths.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["wavelength_nm", "value"])?;
        for (l, v) in self.wavelengths.iter().zip(&self.values) {
            wr.write_record([format!("{l}"), format!("{v:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> csv::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// One interleaved sample set of a plane: either `(E_u, H_v)` or `(E_v, H_u)`.
#[derive(Clone, Debug, Default)]
pub struct PlaneSet {
    /// Flat index of the E sample (also of the H sample on the `+½` side).
    pub idx: Vec<usize>,
    /// Trapezoid weights (1 inside, ½ on the boundary lines).
    pub weight: Vec<f64>,
    /// Physical sample positions.
    pub pos: Vec<[f64; 3]>,
    /// Wavelength-major DFT accumulators.
    pub e: Vec<Complex64>,
    pub h: Vec<Complex64>,
}

/// DFT of the tangential fields on a rectangle of grid nodes normal to `axis`.
#[derive(Clone, Debug)]
pub struct DftPlane {
    pub axis: Axis,
    pub index: usize,
    /// +1 or -1: orientation of the reported flux relative to `+axis`.
    pub sign: f64,
    pub sets: [PlaneSet; 2],
}

impl DftPlane {
    /// Plane at node `index` along `axis`, spanning nodes `lo..=hi` in the
    /// transverse `(u, v)` order.
    pub fn new(
        grid: &YeeGrid,
        axis: Axis,
        index: usize,
        lo: [usize; 2],
        hi: [usize; 2],
        sign: f64,
        nw: usize,
    ) -> Self {
        let (u, v) = axis.transverse();
        let a = axis.index();
        let mut sets: [PlaneSet; 2] = Default::default();
        // set 0: E_u at (u cell, v node); set 1: E_v at (u node, v cell).
        for (s, set) in sets.iter_mut().enumerate() {
            let comp = Component::electric(if s == 0 { u } else { v });
            let (cu, cv) = if s == 0 {
                (lo[0]..hi[0], lo[1]..hi[1] + 1)
            } else {
                (lo[0]..hi[0] + 1, lo[1]..hi[1])
            };
            for iu in cu.clone() {
                for iv in cv.clone() {
                    let mut ijk = [0usize; 3];
                    ijk[a] = index;
                    ijk[u.index()] = iu;
                    ijk[v.index()] = iv;
                    let edge_u = s == 1 && (iu == lo[0] || iu == hi[0]);
                    let edge_v = s == 0 && (iv == lo[1] || iv == hi[1]);
                    let w = if edge_u || edge_v { 0.5 } else { 1.0 };
                    set.idx.push(grid.idx(ijk[0], ijk[1], ijk[2]));
                    set.weight.push(w);
                    set.pos.push(grid.position(comp, ijk[0], ijk[1], ijk[2]));
                }
            }
            set.e = vec![Complex64::default(); nw * set.idx.len()];
            set.h = vec![Complex64::default(); nw * set.idx.len()];
        }
        Self {
            axis,
            index,
            sign,
            sets,
        }
    }

    fn accumulate<T: Real>(&mut self, state: &FieldState<T>, pe: &[Complex64], ph: &[Complex64]) {
        let (u, v) = self.axis.transverse();
        let stride = [state.extent[1] * state.extent[2], state.extent[2], 1][self.axis.index()];
        for (s, set) in self.sets.iter_mut().enumerate() {
            let (ec, hc) = if s == 0 { (u, v) } else { (v, u) };
            let ef = &state.e[ec.index()];
            let hf = &state.h[hc.index()];
            let n = set.idx.len();
            if n == 0 {
                continue;
            }
            let (ev, hv): (Vec<f64>, Vec<f64>) = set
                .idx
                .iter()
                .map(|&i| (ef[i].f64(), 0.5 * (hf[i].f64() + hf[i - stride].f64())))
                .unzip();
            set.e
                .par_chunks_mut(n)
                .zip(set.h.par_chunks_mut(n))
                .enumerate()
                .for_each(|(w, (ea, ha))| {
                    let (a, b) = (pe[w], ph[w]);
                    for p in 0..n {
                        ea[p] += a * ev[p];
                        ha[p] += b * hv[p];
                    }
                });
        }
    }

    /// `sign · ½ Re Σ w (E_u H_v* - E_v H_u*) Δ²` per wavelength.
    pub fn flux(&self, resolution: f64, nw: usize) -> Vec<f64> {
        let [s0, s1] = &self.sets;
        (0..nw)
            .map(|w| {
                let part = |set: &PlaneSet| -> f64 {
                    let n = set.idx.len();
                    (0..n)
                        .map(|p| set.weight[p] * (set.e[w * n + p] * set.h[w * n + p].conj()).re)
                        .sum()
                };
                self.sign * 0.5 * (part(s0) - part(s1)) * resolution * resolution
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Plane,
    Box,
}

/// A named flux surface: one plane or the six faces of a box.
#[derive(Clone, Debug)]
pub struct DftMonitor {
    pub name: String,
    pub kind: RegionKind,
    pub faces: Vec<DftPlane>,
    pub wavelengths: Vec<f64>,
}

impl DftMonitor {
    pub fn accumulate<T: Real>(&mut self, state: &FieldState<T>, pe: &[Complex64], ph: &[Complex64]) {
        for f in &mut self.faces {
            f.accumulate(state, pe, ph);
        }
    }

    /// Plane flux along `+axis`, or outward flux for boxes.
    pub fn flux_spectrum(&self, resolution: f64) -> Spectrum {
        let nw = self.wavelengths.len();
        let mut total = vec![0.0; nw];
        for f in &self.faces {
            for (t, x) in total.iter_mut().zip(f.flux(resolution, nw)) {
                *t += x;
            }
        }
        Spectrum::new(self.wavelengths.clone(), total)
    }
}

/// DFT of the field component along `orientation` at a point.
#[derive(Clone, Debug)]
pub struct PointProbe {
    pub name: String,
    pub position: [f64; 3],
    pub orientation: [f64; 3],
    gather: [Vec<(usize, f64)>; 3],
    pub e: Vec<Complex64>,
}

impl PointProbe {
    pub fn new(
        grid: &YeeGrid,
        name: &str,
        position: [f64; 3],
        orientation: [f64; 3],
        nw: usize,
    ) -> Result<Self, FdtdError> {
        let mut gather: [Vec<(usize, f64)>; 3] = Default::default();
        for a in Axis::ALL {
            gather[a.index()] = trilinear_stencil(grid, Component::electric(a), position)?;
        }
        Ok(Self {
            name: name.into(),
            position,
            orientation,
            gather,
            e: vec![Complex64::default(); nw],
        })
    }

    fn accumulate<T: Real>(&mut self, state: &FieldState<T>, pe: &[Complex64]) {
        let val: f64 = Axis::ALL
            .iter()
            .map(|&a| self.orientation[a.index()] * state.gather_e(a, &self.gather[a.index()]))
            .sum();
        for (acc, p) in self.e.iter_mut().zip(pe) {
            *acc += p * val;
        }
    }
}

/// Power delivered by the dipole, `-½ Re(J̃* · Ē̃)`, with `Ē` the time
/// average of E across the current's half step.
#[derive(Clone, Debug)]
pub struct SourcePowerMonitor {
    pub source: DipoleSource,
    stencil: SourceStencil,
    prev_e: [f64; 3],
    pub j: Vec<Complex64>,
    /// `o · Ē` accumulator.
    pub e: Vec<Complex64>,
}

impl SourcePowerMonitor {
    pub fn new(grid: &YeeGrid, source: &DipoleSource, nw: usize) -> Result<Self, FdtdError> {
        Ok(Self {
            source: source.clone(),
            stencil: SourceStencil::new(grid, source)?,
            prev_e: [0.0; 3],
            j: vec![Complex64::default(); nw],
            e: vec![Complex64::default(); nw],
        })
    }

    fn gather<T: Real>(&self, state: &FieldState<T>) -> [f64; 3] {
        Axis::ALL.map(|a| state.gather_e(a, &self.stencil.gather[a.index()]))
    }

    /// Power spectrum; positive when the source does work on the field.
    pub fn power(&self) -> Vec<f64> {
        self.j
            .iter()
            .zip(&self.e)
            .map(|(j, e)| -0.5 * (j.conj() * e).re)
            .collect()
    }

    /// Closed-form free-space power `ω²|J̃|²/(12π)` of the recorded current.
    pub fn analytic_vacuum_power(&self, wavelengths: &[f64]) -> Vec<f64> {
        self.j
            .iter()
            .zip(wavelengths)
            .map(|(j, &l)| {
                let w = omega_internal(l);
                w * w * j.norm_sqr() / (12.0 * std::f64::consts::PI)
            })
            .collect()
    }
}

/// Power absorbed by dispersive media, `½ Re Σ J̃_p* · Ē̃ Δ³` over metal edges.
#[derive(Clone, Debug)]
pub struct AbsorptionMonitor {
    edges: Vec<(usize, usize)>,
    prev_e: Vec<f64>,
    pub j: Vec<Complex64>,
    pub e: Vec<Complex64>,
}

impl AbsorptionMonitor {
    pub fn new<T: Real>(materials: &MaterialMap<T>, nw: usize) -> Self {
        let edges: Vec<(usize, usize)> = materials
            .dispersive
            .iter()
            .map(|d| (d.component, d.index))
            .collect();
        let n = edges.len();
        Self {
            edges,
            prev_e: vec![0.0; n],
            j: vec![Complex64::default(); nw * n],
            e: vec![Complex64::default(); nw * n],
        }
    }

    pub fn power(&self, resolution: f64) -> Vec<f64> {
        let n = self.edges.len();
        if n == 0 {
            return vec![0.0; self.j.len()];
        }
        self.j
            .chunks(n)
            .zip(self.e.chunks(n))
            .map(|(j, e)| {
                0.5 * j
                    .iter()
                    .zip(e)
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum::<f64>()
                    * resolution.powi(3)
            })
            .collect()
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Decayed,
    StepCap,
}

/// All monitors of one run.
#[derive(Clone, Debug)]
pub struct MonitorSet {
    pub wavelengths: Vec<f64>,
    pub resolution: f64,
    /// Time step, internal units.
    pub dt: f64,
    pub stride: usize,
    pub source: SourcePowerMonitor,
    pub absorption: AbsorptionMonitor,
    pub surfaces: Vec<DftMonitor>,
    pub probes: Vec<PointProbe>,
    pub steps: usize,
    pub termination: Option<Termination>,
    pub peak_energy: f64,
    pub final_energy: f64,
    /// Integrated `Σ J·Ē Δt`, the total work done by the source.
    pub injected_energy: f64,
}

/// Largest DFT stride keeping ten samples per period at the shortest wavelength.
pub fn auto_stride(wavelengths: &[f64], dt: f64) -> usize {
    let lmin = wavelengths.iter().cloned().fold(f64::INFINITY, f64::min);
    ((lmin / 10.0 / dt).floor() as usize).max(1)
}

impl MonitorSet {
    pub fn new<T: Real>(
        scene: &SceneConfig,
        materials: &MaterialMap<T>,
        dt: f64,
    ) -> Result<Self, FdtdError> {
        let grid = &scene.grid;
        let nw = scene.wavelengths.len();
        if nw == 0 {
            return Err(FdtdError::InvalidParameter("empty wavelength grid".into()));
        }
        let stride = scene
            .run
            .dft_stride
            .unwrap_or_else(|| auto_stride(&scene.wavelengths, dt));
        let interior = scene.interior_nodes(CPML_CLEARANCE);
        let mut surfaces = Vec::new();
        let mut probes = Vec::new();
        for spec in &scene.monitors {
            match spec {
                MonitorSpec::FluxPlane {
                    name,
                    axis,
                    position,
                    bounds,
                } => {
                    let a = axis.index();
                    let (u, v) = axis.transverse();
                    let p = node_in(grid, *axis, *position, interior[a], name)?;
                    let (mut lo, mut hi) = (
                        [interior[u.index()].0, interior[v.index()].0],
                        [interior[u.index()].1, interior[v.index()].1],
                    );
                    if let Some((blo, bhi)) = bounds {
                        for (t, ax) in [u, v].into_iter().enumerate() {
                            let l = grid.nearest_node(ax, blo[t]).max(lo[t] as isize) as usize;
                            let h = grid.nearest_node(ax, bhi[t]).min(hi[t] as isize) as usize;
                            lo[t] = l;
                            hi[t] = h.max(l + 1);
                        }
                    }
                    surfaces.push(DftMonitor {
                        name: name.clone(),
                        kind: RegionKind::Plane,
                        faces: vec![DftPlane::new(grid, *axis, p, lo, hi, 1.0, nw)],
                        wavelengths: scene.wavelengths.clone(),
                    });
                }
                MonitorSpec::FluxBox { name, lo, hi } => {
                    let mut nlo = [0usize; 3];
                    let mut nhi = [0usize; 3];
                    for a in Axis::ALL {
                        let i = a.index();
                        let l = grid.nearest_node(a, lo[i]).max(interior[i].0 as isize) as usize;
                        let h = grid.nearest_node(a, hi[i]).min(interior[i].1 as isize) as usize;
                        if h <= l + 1 {
                            return Err(FdtdError::InvalidParameter(format!(
                                "flux box {name} is degenerate along {a:?}"
                            )));
                        }
                        nlo[i] = l;
                        nhi[i] = h;
                    }
                    let mut faces = Vec::with_capacity(6);
                    for a in Axis::ALL {
                        let (u, v) = a.transverse();
                        let tlo = [nlo[u.index()], nlo[v.index()]];
                        let thi = [nhi[u.index()], nhi[v.index()]];
                        faces.push(DftPlane::new(grid, a, nlo[a.index()], tlo, thi, -1.0, nw));
                        faces.push(DftPlane::new(grid, a, nhi[a.index()], tlo, thi, 1.0, nw));
                    }
                    surfaces.push(DftMonitor {
                        name: name.clone(),
                        kind: RegionKind::Box,
                        faces,
                        wavelengths: scene.wavelengths.clone(),
                    });
                }
                MonitorSpec::Probe {
                    name,
                    position,
                    orientation,
                } => probes.push(PointProbe::new(grid, name, *position, *orientation, nw)?),
            }
        }
        Ok(Self {
            wavelengths: scene.wavelengths.clone(),
            resolution: grid.resolution,
            dt,
            stride,
            source: SourcePowerMonitor::new(grid, &scene.dipole, nw)?,
            absorption: AbsorptionMonitor::new(materials, nw),
            surfaces,
            probes,
            steps: 0,
            termination: None,
            peak_energy: 0.0,
            final_energy: 0.0,
            injected_energy: 0.0,
        })
    }

    /// Records the fields after the E update of a completed step.
    pub fn accumulate<T: Real>(&mut self, state: &FieldState<T>, materials: &MaterialMap<T>) {
        let s = state.step;
        if s == 0 {
            return;
        }
        let dt = self.dt;
        let n = s - 1;
        // Source: J^{n+½} against Ē^{n+½}.
        let e_now = self.source.gather(state);
        let o = self.source.source.orientation;
        let e_bar: f64 = (0..3).map(|a| o[a] * 0.5 * (e_now[a] + self.source.prev_e[a])).sum();
        let j = current_at(&self.source.source.pulse, n, dt);
        self.injected_energy -= j * e_bar * dt;
        self.source.prev_e = e_now;

        let abs_n = self.absorption.edges.len();
        let mut jp = Vec::with_capacity(abs_n);
        let mut ebar = Vec::with_capacity(abs_n);
        for (k, &(c, idx)) in self.absorption.edges.iter().enumerate() {
            let now = state.e[c][idx].f64();
            ebar.push(0.5 * (now + self.absorption.prev_e[k]));
            self.absorption.prev_e[k] = now;
            jp.push(state.aux.delta[k].f64() / dt);
        }
        debug_assert!(materials.dispersive.len() == abs_n);

        if !s.is_multiple_of(self.stride) {
            return;
        }
        let span = self.stride as f64 * dt;
        let (pe, ph): (Vec<Complex64>, Vec<Complex64>) = self
            .wavelengths
            .iter()
            .map(|&l| {
                let w = omega_internal(l);
                (
                    Complex64::from_polar(span, w * s as f64 * dt),
                    Complex64::from_polar(span, w * (s as f64 - 0.5) * dt),
                )
            })
            .unzip();
        for (w, p) in ph.iter().enumerate() {
            self.source.j[w] += p * j;
            self.source.e[w] += p * e_bar;
        }
        if abs_n > 0 {
            self.absorption
                .j
                .par_chunks_mut(abs_n)
                .zip(self.absorption.e.par_chunks_mut(abs_n))
                .enumerate()
                .for_each(|(w, (ja, ea))| {
                    let p = ph[w];
                    for k in 0..abs_n {
                        ja[k] += p * jp[k];
                        ea[k] += p * ebar[k];
                    }
                });
        }
        for m in &mut self.surfaces {
            m.accumulate(state, &pe, &ph);
        }
        for p in &mut self.probes {
            p.accumulate(state, &pe);
        }
    }

    /// Total power delivered by the dipole (radiated + absorbed).
    pub fn source_power(&self) -> Spectrum {
        Spectrum::new(self.wavelengths.clone(), self.source.power())
    }

    pub fn analytic_vacuum_power(&self) -> Spectrum {
        Spectrum::new(
            self.wavelengths.clone(),
            self.source.analytic_vacuum_power(&self.wavelengths),
        )
    }

    pub fn absorbed_power(&self) -> Spectrum {
        let mut p = self.absorption.power(self.resolution);
        p.resize(self.wavelengths.len(), 0.0);
        Spectrum::new(self.wavelengths.clone(), p)
    }

    pub fn surface(&self, name: &str) -> Option<&DftMonitor> {
        self.surfaces.iter().find(|m| m.name == name)
    }

    pub fn flux(&self, name: &str) -> Option<Spectrum> {
        self.surface(name).map(|m| m.flux_spectrum(self.resolution))
    }

    pub fn probe(&self, name: &str) -> Option<&PointProbe> {
        self.probes.iter().find(|p| p.name == name)
    }

    /// Probe field per unit source current.
    pub fn green(&self, probe: &str) -> Option<Vec<Complex64>> {
        let p = self.probe(probe)?;
        Some(p.e.iter().zip(&self.source.j).map(|(e, j)| e / j).collect())
    }
}

fn node_in(
    grid: &YeeGrid,
    axis: Axis,
    x: f64,
    range: (usize, usize),
    name: &str,
) -> Result<usize, FdtdError> {
    let n = grid.nearest_node(axis, x);
    if n < range.0 as isize || n > range.1 as isize {
        return Err(FdtdError::InvalidParameter(format!(
            "monitor {name} at {x} nm lies within {CPML_CLEARANCE} cells of the CPML"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_phasor_after_fifty_cycles() {
        // cos(ωt + φ) accumulated with e^{iωt} and normalized by the window
        // converges to e^{-iφ}/2.
        let l = 700.0;
        let w = omega_internal(l);
        let dt = 1.0;
        let phi = 0.7;
        let cycles = 50.0;
        let n = (cycles * l / dt) as usize;
        let mut acc = Complex64::default();
        for s in 0..n {
            let t = s as f64 * dt;
            acc += Complex64::from_polar(dt, w * t) * (w * t + phi).cos();
        }
        let got = acc / (n as f64 * dt);
        let want = Complex64::from_polar(0.5, -phi);
        assert!((got - want).norm() / want.norm() < 0.01);
    }

    #[test]
    fn stride_resolves_shortest_wavelength() {
        assert_eq!(auto_stride(&[600.0, 900.0], 1.5), 40);
        assert_eq!(auto_stride(&[600.0], 100.0), 1);
    }

    #[test]
    fn spectrum_csv_has_header() {
        let s = Spectrum::new(vec![600.0, 605.0], vec![1.0, 2.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("wavelength_nm,value\n600,"));
    }
}
