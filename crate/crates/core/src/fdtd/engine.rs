//! Leapfrog update of the Yee fields.
//!
//! E components sit on the domain's PEC box: tangential E on the outer
//! faces is never updated. The CPML occupies the outer `thickness` cells.
//!
//! All updates are pointwise given the other field, so slab-parallel
//! execution gives bit-identical results for any thread count.

use rayon::prelude::*;

use super::cpml::{AxisProfile, CpmlFields, CpmlProfile};
use super::grid::{Axis, YeeGrid};
use super::source::{DipoleSource, Pulse, SourceStencil};
use super::FdtdError;
use crate::geometry::MaterialMap;
use crate::scalar::Real;

/// Polarisation memory of the dispersive edges.
#[derive(Clone, Debug)]
pub struct AdeState<T> {
    /// Per dispersive edge: polariser values, `[P^n, P^{n-1}]` for each pole.
    pub polarization: Vec<T>,
    /// First slot of each edge in `polarization`.
    pub offsets: Vec<usize>,
    /// Per model: per-pole recursion coefficients.
    pub coefficients: Vec<Vec<[T; 3]>>,
    /// Scratch: Σ(P^{n+1} − P^n) per edge for the current step.
    pub delta: Vec<T>,
}

impl<T: Real> AdeState<T> {
    fn new(materials: &MaterialMap<T>, dt: f64) -> Self {
        let coefficients: Vec<Vec<[T; 3]>> = materials
            .models
            .iter()
            .map(|m| {
                m.ade_coefficients(dt)
                    .into_iter()
                    .map(|c| [T::of(c[0]), T::of(c[1]), T::of(c[2])])
                    .collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(materials.dispersive.len());
        let mut n = 0;
        for e in &materials.dispersive {
            offsets.push(n);
            n += 2 * coefficients[e.model].len();
        }
        Self {
            polarization: vec![T::zero(); n],
            offsets,
            coefficients,
            delta: vec![T::zero(); materials.dispersive.len()],
        }
    }
}

/// Electromagnetic state on the grid.
#[derive(Clone, Debug)]
pub struct FieldState<T> {
    pub extent: [usize; 3],
    pub resolution: f64,
    /// Ex, Ey, Ez.
    pub e: [Vec<T>; 3],
    /// Hx, Hy, Hz.
    pub h: [Vec<T>; 3],
    pub aux: AdeState<T>,
    pub cpml: CpmlFields<T>,
    /// Completed leapfrog cycles: E is at `step * dt`, H at `(step - 1/2) * dt`.
    pub step: usize,
    /// Time step, internal units (nm/c).
    pub dt: f64,
}

impl<T: Real> FieldState<T> {
    pub fn new(
        grid: &YeeGrid,
        materials: &MaterialMap<T>,
        cpml: &CpmlProfile<T>,
        dt: f64,
    ) -> Result<Self, FdtdError> {
        if materials.extent != grid.extent {
            return Err(FdtdError::GridMismatch(format!(
                "materials {:?} vs grid {:?}",
                materials.extent, grid.extent
            )));
        }
        let max_dt = grid.courant_dt_internal(1.0);
        if !(dt > 0.0 && dt <= max_dt) {
            return Err(FdtdError::InvalidParameter(format!(
                "dt {dt} violates the Courant bound {max_dt}"
            )));
        }
        for m in &materials.models {
            m.validate(dt).map_err(FdtdError::InvalidParameter)?;
        }
        let n = grid.len();
        let z = || vec![T::zero(); n];
        Ok(Self {
            extent: grid.extent,
            resolution: grid.resolution,
            e: [z(), z(), z()],
            h: [z(), z(), z()],
            aux: AdeState::new(materials, dt),
            cpml: CpmlFields::new(grid, cpml.thickness()),
            step: 0,
            dt,
        })
    }

    /// Time of the E field, internal units.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Electromagnetic energy `½ Σ (ε|E|² + |H|²) Δ³`, with ε∞ on dispersive edges.
    ///
    /// Reduced slab by slab in a fixed order.
    pub fn energy(&self, materials: &MaterialMap<T>) -> f64 {
        let s = self.extent[1] * self.extent[2];
        let partial: Vec<f64> = (0..self.extent[0])
            .into_par_iter()
            .map(|i| {
                let r = i * s..(i + 1) * s;
                let mut acc = 0.0f64;
                for c in 0..3 {
                    let e = &self.e[c][r.clone()];
                    let ie = &materials.inv_eps[c][r.clone()];
                    let h = &self.h[c][r.clone()];
                    for ((&ev, &iv), &hv) in e.iter().zip(ie).zip(h) {
                        let ev = ev.f64();
                        let hv = hv.f64();
                        acc += ev * ev / iv.f64() + hv * hv;
                    }
                }
                acc
            })
            .collect();
        0.5 * partial.iter().sum::<f64>() * self.resolution.powi(3)
    }

    /// Whether any field sample is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.e
            .iter()
            .chain(self.h.iter())
            .any(|f| f.par_iter().any(|v| !v.is_finite()))
    }

    /// Electric field gathered with a stencil.
    pub fn gather_e(&self, axis: Axis, stencil: &[(usize, f64)]) -> f64 {
        let f = &self.e[axis.index()];
        stencil.iter().map(|&(i, w)| w * f[i].f64()).sum()
    }
}

/// A dipole bound to its lattice stencil.
#[derive(Clone, Debug)]
pub struct SourceDrive {
    pub source: DipoleSource,
    pub stencil: SourceStencil,
}

impl SourceDrive {
    pub fn new(grid: &YeeGrid, source: &DipoleSource) -> Result<Self, FdtdError> {
        source.validate()?;
        Ok(Self {
            source: source.clone(),
            stencil: SourceStencil::new(grid, source)?,
        })
    }

    /// Current moment `J^{n+1/2} = (p^{n+1} - p^n) / dt` for cycle `n`.
    pub fn current(&self, step: usize, dt: f64) -> f64 {
        current_at(&self.source.pulse, step, dt)
    }
}

pub fn current_at(pulse: &Pulse, step: usize, dt: f64) -> f64 {
    (pulse.moment((step + 1) as f64 * dt) - pulse.moment(step as f64 * dt)) / dt
}

/// Advances `state` by one leapfrog cycle.
pub fn step<T: Real>(
    state: &mut FieldState<T>,
    materials: &MaterialMap<T>,
    cpml: &CpmlProfile<T>,
    sources: &[SourceDrive],
) -> Result<(), FdtdError> {
    if materials.extent != state.extent
        || cpml.axes.iter().zip(state.extent).any(|(a, n)| a.n != n)
    {
        return Err(FdtdError::GridMismatch(
            "field state, materials and CPML profile disagree on extent".into(),
        ));
    }
    let ext = state.extent;
    let dt = state.dt;
    let c = T::of(dt / state.resolution);

    update_h(ext, &state.e, &mut state.h, c);
    for a in Axis::ALL {
        cpml_h(ext, a, &state.e, &mut state.h, &mut state.cpml, &cpml.axes[a.index()], c);
    }

    ade_advance(state, materials);
    update_e(ext, &state.h, &mut state.e, &materials.inv_eps, c);
    for a in Axis::ALL {
        cpml_e(
            ext,
            a,
            &state.h,
            &mut state.e,
            &mut state.cpml,
            &cpml.axes[a.index()],
            &materials.inv_eps,
            c,
        );
    }
    ade_correct(state, materials);

    let vol = state.resolution.powi(3);
    for s in sources {
        let j = s.current(state.step, dt);
        for a in 0..3 {
            for &(idx, w) in &s.stencil.edges[a] {
                let ie = materials.inv_eps[a][idx].f64();
                let v = state.e[a][idx].f64() - dt * ie * w * j / vol;
                state.e[a][idx] = T::of(v);
            }
        }
    }
    state.step += 1;

    let probe_bad = sources.iter().any(|s| {
        s.stencil
            .gather
            .iter()
            .enumerate()
            .any(|(a, st)| st.iter().any(|&(i, _)| !state.e[a][i].is_finite()))
    }) || materials
        .dispersive
        .iter()
        .any(|d| !state.e[d.component][d.index].is_finite());
    if probe_bad {
        return Err(FdtdError::NonFinite { step: state.step });
    }
    Ok(())
}

fn update_h<T: Real>(ext: [usize; 3], e: &[Vec<T>; 3], h: &mut [Vec<T>; 3], c: T) {
    let [nx, ny, nz] = ext;
    let s = ny * nz;
    let (ex, ey, ez) = (&e[0][..], &e[1][..], &e[2][..]);
    let [hx, hy, hz] = h;

    hx.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        let ez_s = &ez[i * s..(i + 1) * s];
        let ey_s = &ey[i * s..(i + 1) * s];
        for j in 0..ny - 1 {
            let r = j * nz;
            let out = &mut slab[r..r + nz - 1];
            let ez0 = &ez_s[r..r + nz - 1];
            let ez1 = &ez_s[r + nz..r + 2 * nz - 1];
            let ey0 = &ey_s[r..r + nz - 1];
            let ey1 = &ey_s[r + 1..r + nz];
            for k in 0..nz - 1 {
                out[k] -= c * ((ez1[k] - ez0[k]) - (ey1[k] - ey0[k]));
            }
        }
    });

    hy.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        if i + 1 >= nx {
            return;
        }
        let ex_s = &ex[i * s..(i + 1) * s];
        let ez_s = &ez[i * s..(i + 1) * s];
        let ez_n = &ez[(i + 1) * s..(i + 2) * s];
        for j in 0..ny {
            let r = j * nz;
            let out = &mut slab[r..r + nz - 1];
            let ex0 = &ex_s[r..r + nz - 1];
            let ex1 = &ex_s[r + 1..r + nz];
            let ez0 = &ez_s[r..r + nz - 1];
            let ez1 = &ez_n[r..r + nz - 1];
            for k in 0..nz - 1 {
                out[k] -= c * ((ex1[k] - ex0[k]) - (ez1[k] - ez0[k]));
            }
        }
    });

    hz.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        if i + 1 >= nx {
            return;
        }
        let ex_s = &ex[i * s..(i + 1) * s];
        let ey_s = &ey[i * s..(i + 1) * s];
        let ey_n = &ey[(i + 1) * s..(i + 2) * s];
        for j in 0..ny - 1 {
            let r = j * nz;
            let out = &mut slab[r..r + nz];
            let ey0 = &ey_s[r..r + nz];
            let ey1 = &ey_n[r..r + nz];
            let ex0 = &ex_s[r..r + nz];
            let ex1 = &ex_s[r + nz..r + 2 * nz];
            for k in 0..nz {
                out[k] -= c * ((ey1[k] - ey0[k]) - (ex1[k] - ex0[k]));
            }
        }
    });
}

fn update_e<T: Real>(
    ext: [usize; 3],
    h: &[Vec<T>; 3],
    e: &mut [Vec<T>; 3],
    inv_eps: &[Vec<T>; 3],
    c: T,
) {
    let [nx, ny, nz] = ext;
    let s = ny * nz;
    let (hx, hy, hz) = (&h[0][..], &h[1][..], &h[2][..]);
    let [ex, ey, ez] = e;

    ex.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        if i + 1 >= nx {
            return;
        }
        let ie = &inv_eps[0][i * s..(i + 1) * s];
        let hz_s = &hz[i * s..(i + 1) * s];
        let hy_s = &hy[i * s..(i + 1) * s];
        for j in 1..ny - 1 {
            let r = j * nz;
            let out = &mut slab[r + 1..r + nz - 1];
            let ie = &ie[r + 1..r + nz - 1];
            let hz0 = &hz_s[r + 1..r + nz - 1];
            let hzm = &hz_s[r - nz + 1..r - 1];
            let hy0 = &hy_s[r + 1..r + nz - 1];
            let hym = &hy_s[r..r + nz - 2];
            for k in 0..nz - 2 {
                out[k] += c * ie[k] * ((hz0[k] - hzm[k]) - (hy0[k] - hym[k]));
            }
        }
    });

    ey.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        if i == 0 || i + 1 >= nx {
            return;
        }
        let ie = &inv_eps[1][i * s..(i + 1) * s];
        let hx_s = &hx[i * s..(i + 1) * s];
        let hz_s = &hz[i * s..(i + 1) * s];
        let hz_p = &hz[(i - 1) * s..i * s];
        for j in 0..ny - 1 {
            let r = j * nz;
            let out = &mut slab[r + 1..r + nz - 1];
            let ie = &ie[r + 1..r + nz - 1];
            let hx0 = &hx_s[r + 1..r + nz - 1];
            let hxm = &hx_s[r..r + nz - 2];
            let hz0 = &hz_s[r + 1..r + nz - 1];
            let hzm = &hz_p[r + 1..r + nz - 1];
            for k in 0..nz - 2 {
                out[k] += c * ie[k] * ((hx0[k] - hxm[k]) - (hz0[k] - hzm[k]));
            }
        }
    });

    ez.par_chunks_mut(s).enumerate().for_each(|(i, slab)| {
        if i == 0 || i + 1 >= nx {
            return;
        }
        let ie = &inv_eps[2][i * s..(i + 1) * s];
        let hy_s = &hy[i * s..(i + 1) * s];
        let hy_p = &hy[(i - 1) * s..i * s];
        let hx_s = &hx[i * s..(i + 1) * s];
        for j in 1..ny - 1 {
            let r = j * nz;
            let out = &mut slab[r..r + nz - 1];
            let ie = &ie[r..r + nz - 1];
            let hy0 = &hy_s[r..r + nz - 1];
            let hym = &hy_p[r..r + nz - 1];
            let hx0 = &hx_s[r..r + nz - 1];
            let hxm = &hx_s[r - nz..r - 1];
            for k in 0..nz - 1 {
                out[k] += c * ie[k] * ((hy0[k] - hym[k]) - (hx0[k] - hxm[k]));
            }
        }
    });
}

/// Valid update ranges `[lo, hi)` per axis for a field component along `comp`.
fn e_ranges(ext: [usize; 3], comp: Axis) -> [(usize, usize); 3] {
    let mut r = [(1, ext[0] - 1), (1, ext[1] - 1), (1, ext[2] - 1)];
    r[comp.index()] = (0, ext[comp.index()] - 1);
    r
}

fn h_ranges(ext: [usize; 3], comp: Axis) -> [(usize, usize); 3] {
    let mut r = [(0, ext[0] - 1), (0, ext[1] - 1), (0, ext[2] - 1)];
    r[comp.index()] = (0, ext[comp.index()]);
    r
}

struct SlabPass<'a, T> {
    ext: [usize; 3],
    axis: usize,
    slab: (usize, usize),
    ranges: [(usize, usize); 3],
    inv_kappa_m1: &'a [T],
    b: &'a [T],
    c: &'a [T],
    /// Per-edge 1/ε for E passes, `None` for H.
    inv_eps: Option<&'a [T]>,
    scale: T,
    backward: bool,
}

impl<T: Real> SlabPass<'_, T> {
    fn run(&self, target: &mut [T], source: &[T], psi: &mut [T], psi_shape: [usize; 3]) {
        let [_, ny, nz] = self.ext;
        let s = ny * nz;
        let st = [s, nz, 1][self.axis];
        let ps = psi_shape[1] * psi_shape[2];
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for d in 0..3 {
            lo[d] = self.ranges[d].0;
            hi[d] = self.ranges[d].1;
            if d == self.axis {
                lo[d] = lo[d].max(self.slab.0);
                hi[d] = hi[d].min(self.slab.1);
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return;
        }
        let mut origin = [0usize; 3];
        origin[self.axis] = self.slab.0;
        let (k0, k1) = (lo[2], hi[2]);
        let len = k1 - k0;

        // Pair each x-slab of the target with the matching psi slab.
        let x_first = origin[0];
        let tgt_chunks = target[x_first * s..(x_first + psi_shape[0]) * s].par_chunks_mut(s);
        tgt_chunks
            .zip(psi.par_chunks_mut(ps))
            .enumerate()
            .for_each(|(local_x, (tgt, psi_x))| {
                let i = x_first + local_x;
                if i < lo[0] || i >= hi[0] {
                    return;
                }
                for j in lo[1]..hi[1] {
                    let row = j * nz + k0;
                    let idx0 = i * s + row;
                    let (sa, sb) = if self.backward {
                        (&source[idx0..idx0 + len], &source[idx0 - st..idx0 - st + len])
                    } else {
                        (&source[idx0 + st..idx0 + st + len], &source[idx0..idx0 + len])
                    };
                    let p0 = (j - origin[1]) * psi_shape[2] + (k0 - origin[2]);
                    let pr = &mut psi_x[p0..p0 + len];
                    let tr = &mut tgt[row..row + len];
                    let coef = self.inv_eps.map(|ie| &ie[idx0..idx0 + len]);
                    if self.axis == 2 {
                        let b = &self.b[k0..k1];
                        let c = &self.c[k0..k1];
                        let ik = &self.inv_kappa_m1[k0..k1];
                        row_kernel(tr, sa, sb, pr, coef, self.scale, |k| (b[k], c[k], ik[k]));
                    } else {
                        let along = if self.axis == 0 { i } else { j };
                        let v = (self.b[along], self.c[along], self.inv_kappa_m1[along]);
                        row_kernel(tr, sa, sb, pr, coef, self.scale, |_| v);
                    }
                }
            });
    }
}

#[inline(always)]
fn row_kernel<T: Real>(
    tgt: &mut [T],
    sa: &[T],
    sb: &[T],
    psi: &mut [T],
    inv_eps: Option<&[T]>,
    scale: T,
    prof: impl Fn(usize) -> (T, T, T),
) {
    let n = tgt.len();
    let (sa, sb, psi) = (&sa[..n], &sb[..n], &mut psi[..n]);
    match inv_eps {
        Some(ie) => {
            let ie = &ie[..n];
            for k in 0..n {
                let (b, c, ik) = prof(k);
                let d = sa[k] - sb[k];
                let p = b * psi[k] + c * d;
                psi[k] = p;
                tgt[k] += scale * ie[k] * (ik * d + p);
            }
        }
        None => {
            for k in 0..n {
                let (b, c, ik) = prof(k);
                let d = sa[k] - sb[k];
                let p = b * psi[k] + c * d;
                psi[k] = p;
                tgt[k] += scale * (ik * d + p);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cpml_e<T: Real>(
    ext: [usize; 3],
    axis: Axis,
    h: &[Vec<T>; 3],
    e: &mut [Vec<T>; 3],
    psi: &mut CpmlFields<T>,
    prof: &AxisProfile<T>,
    inv_eps: &[Vec<T>; 3],
    c: T,
) {
    let (u, v) = axis.transverse();
    let slabs = prof.slabs();
    let sp = &mut psi.axes[axis.index()];
    let shape = sp.shape;
    // E_u gets -∂_a H_v, E_v gets +∂_a H_u.
    let jobs = [(u, v, -c, 0usize), (v, u, c, 1usize)];
    for (slab_i, &slab) in slabs.iter().enumerate() {
        for &(target, source, scale, which) in &jobs {
            let pass = SlabPass {
                ext,
                axis: axis.index(),
                slab,
                ranges: e_ranges(ext, target),
                inv_kappa_m1: &prof.e_inv_kappa_m1,
                b: &prof.e_b,
                c: &prof.e_c,
                inv_eps: Some(&inv_eps[target.index()]),
                scale,
                backward: true,
            };
            pass.run(
                &mut e[target.index()],
                &h[source.index()],
                &mut sp.e[slab_i][which],
                shape,
            );
        }
    }
}

fn cpml_h<T: Real>(
    ext: [usize; 3],
    axis: Axis,
    e: &[Vec<T>; 3],
    h: &mut [Vec<T>; 3],
    psi: &mut CpmlFields<T>,
    prof: &AxisProfile<T>,
    c: T,
) {
    let (u, v) = axis.transverse();
    let slabs = prof.slabs();
    let sp = &mut psi.axes[axis.index()];
    let shape = sp.shape;
    // H_u gets +∂_a E_v, H_v gets -∂_a E_u.
    let jobs = [(u, v, c, 0usize), (v, u, -c, 1usize)];
    for (slab_i, &slab) in slabs.iter().enumerate() {
        for &(target, source, scale, which) in &jobs {
            let mut ranges = h_ranges(ext, target);
            // forward difference needs the next node along the slab axis
            let a = axis.index();
            ranges[a].1 = ranges[a].1.min(ext[a] - 1);
            let pass = SlabPass {
                ext,
                axis: a,
                slab,
                ranges,
                inv_kappa_m1: &prof.h_inv_kappa_m1,
                b: &prof.h_b,
                c: &prof.h_c,
                inv_eps: None,
                scale,
                backward: false,
            };
            pass.run(
                &mut h[target.index()],
                &e[source.index()],
                &mut sp.h[slab_i][which],
                shape,
            );
        }
    }
}

fn ade_advance<T: Real>(state: &mut FieldState<T>, materials: &MaterialMap<T>) {
    let aux = &mut state.aux;
    for (n, d) in materials.dispersive.iter().enumerate() {
        let e = state.e[d.component][d.index];
        let coeffs = &aux.coefficients[d.model];
        let base = aux.offsets[n];
        let mut delta = T::zero();
        for (p, c) in coeffs.iter().enumerate() {
            let now = aux.polarization[base + 2 * p];
            let prev = aux.polarization[base + 2 * p + 1];
            let next = c[0] * now + c[1] * prev + c[2] * e;
            aux.polarization[base + 2 * p] = next;
            aux.polarization[base + 2 * p + 1] = now;
            delta += next - now;
        }
        aux.delta[n] = delta;
    }
}

fn ade_correct<T: Real>(state: &mut FieldState<T>, materials: &MaterialMap<T>) {
    for (n, d) in materials.dispersive.iter().enumerate() {
        let ie = materials.inv_eps[d.component][d.index];
        state.e[d.component][d.index] -= ie * state.aux.delta[n];
    }
}
