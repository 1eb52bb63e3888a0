//! Scene description and rasterization onto the Yee lattice.
//!
//! Dielectric interfaces get volume-fraction permittivity averaging from a
//! 4×4×4 supersample of the cell around each edge. Dispersive (metal) edges
//! are staircased: an edge belongs to the metal when its midpoint does.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fdtd::{Axis, Component, CpmlParams, DipoleSource, DrudeLorentzModel, YeeGrid};
use crate::scalar::Real;
use crate::units::default_wavelengths;

/// Refractive index of the silica fiber in the time-domain model.
pub const SILICA_INDEX: f64 = 1.4537;
/// Gold rod diameter, nm.
pub const ROD_DIAMETER: f64 = 25.0;

const SUPERSAMPLE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("shape {0} extends outside the grid")]
    OutOfBounds(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Circular cylinder; `length: None` is infinite along the axis.
    Cylinder {
        axis: Axis,
        center: [f64; 3],
        radius: f64,
        length: Option<f64>,
    },
    /// Cylinder with hemispherical caps; `length` is tip to tip.
    Capsule {
        axis: Axis,
        center: [f64; 3],
        length: f64,
        diameter: f64,
    },
    Block { corner: [f64; 3], size: [f64; 3] },
}

impl Shape {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidGeometry(m.into()));
        match *self {
            Shape::Cylinder { radius, length, .. } => {
                if !(radius > 0.0) || length.is_some_and(|l| !(l > 0.0)) {
                    return bad("cylinder dimensions must be positive");
                }
            }
            Shape::Capsule {
                length, diameter, ..
            } => {
                if !(diameter > 0.0) || length < diameter {
                    return bad("capsule needs diameter > 0 and length >= diameter");
                }
            }
            Shape::Block { size, .. } => {
                if size.iter().any(|s| !(*s > 0.0)) {
                    return bad("block size must be positive");
                }
            }
        }
        Ok(())
    }

    /// Signed distance (negative inside). Exact inside; a lower bound on the
    /// true distance outside finite cylinders and blocks.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        match *self {
            Shape::Cylinder {
                axis,
                center,
                radius,
                length,
            } => {
                let (s, r) = axial_radial(axis, center, p);
                let radial = r - radius;
                match length {
                    Some(l) => radial.max(s.abs() - 0.5 * l),
                    None => radial,
                }
            }
            Shape::Capsule {
                axis,
                center,
                length,
                diameter,
            } => {
                let (s, r) = axial_radial(axis, center, p);
                let half = 0.5 * (length - diameter);
                let ds = (s.abs() - half).max(0.0);
                (ds * ds + r * r).sqrt() - 0.5 * diameter
            }
            Shape::Block { corner, size } => {
                let mut outside = 0.0f64;
                let mut inside = f64::NEG_INFINITY;
                for a in 0..3 {
                    let c = corner[a] + 0.5 * size[a];
                    let q = (p[a] - c).abs() - 0.5 * size[a];
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                if inside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.signed_distance(p) <= 0.0
    }

    /// Axis-aligned bounds, `None` when infinite.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        match *self {
            Shape::Cylinder {
                axis,
                center,
                radius,
                length,
            } => {
                let l = length?;
                Some(axis_box(axis, center, radius, 0.5 * l))
            }
            Shape::Capsule {
                axis,
                center,
                length,
                diameter,
            } => Some(axis_box(axis, center, 0.5 * diameter, 0.5 * length)),
            Shape::Block { corner, size } => Some((
                corner,
                [corner[0] + size[0], corner[1] + size[1], corner[2] + size[2]],
            )),
        }
    }

    /// Analytic volume, nm³ (`None` when infinite).
    pub fn volume(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match *self {
            Shape::Cylinder { radius, length, .. } => length.map(|l| PI * radius * radius * l),
            Shape::Capsule {
                length, diameter, ..
            } => {
                let r = 0.5 * diameter;
                Some(PI * r * r * (length - diameter) + 4.0 / 3.0 * PI * r.powi(3))
            }
            Shape::Block { size, .. } => Some(size.iter().product()),
        }
    }
}

fn axial_radial(axis: Axis, center: [f64; 3], p: [f64; 3]) -> (f64, f64) {
    let a = axis.index();
    let (u, v) = axis.transverse();
    let du = p[u.index()] - center[u.index()];
    let dv = p[v.index()] - center[v.index()];
    (p[a] - center[a], (du * du + dv * dv).sqrt())
}

fn axis_box(axis: Axis, center: [f64; 3], radius: f64, half: f64) -> ([f64; 3], [f64; 3]) {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for d in 0..3 {
        let h = if d == axis.index() { half } else { radius };
        lo[d] = center[d] - h;
        hi[d] = center[d] + h;
    }
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Vacuum,
    Dielectric { index: f64 },
    Dispersive { model: DrudeLorentzModel },
}

impl Material {
    pub fn gold() -> Self {
        Material::Dispersive {
            model: DrudeLorentzModel::gold(),
        }
    }

    pub fn silica() -> Self {
        Material::Dielectric {
            index: SILICA_INDEX,
        }
    }

    /// Permittivity seen by the E update (ε∞ for dispersive media).
    pub fn instantaneous_eps(&self) -> f64 {
        match self {
            Material::Vacuum => 1.0,
            Material::Dielectric { index } => index * index,
            Material::Dispersive { model } => model.eps_inf,
        }
    }

    pub fn is_dispersive(&self) -> bool {
        matches!(self, Material::Dispersive { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneShape {
    pub shape: Shape,
    pub material: Material,
}

/// Requested DFT monitors, in physical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitorSpec {
    /// Closed box; flux is outward-positive.
    FluxBox {
        name: String,
        lo: [f64; 3],
        hi: [f64; 3],
    },
    /// Plane normal to `axis`. `bounds` limits the transverse extent as
    /// `([u_lo, v_lo], [u_hi, v_hi])` in the axis' cyclic transverse order;
    /// `None` spans the interior.
    FluxPlane {
        name: String,
        axis: Axis,
        position: f64,
        bounds: Option<([f64; 2], [f64; 2])>,
    },
    /// Field component along `orientation` at a point.
    Probe {
        name: String,
        position: [f64; 3],
        orientation: [f64; 3],
    },
}

impl MonitorSpec {
    pub fn name(&self) -> &str {
        match self {
            MonitorSpec::FluxBox { name, .. }
            | MonitorSpec::FluxPlane { name, .. }
            | MonitorSpec::Probe { name, .. } => name,
        }
    }
}

/// Time-stepping controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunControl {
    pub courant_safety: f64,
    pub max_steps: usize,
    /// Stop once the field energy falls below this fraction of its peak.
    pub decay_threshold: f64,
    /// Steps between energy checks.
    pub check_interval: usize,
    /// DFT sampling stride in steps; `None` samples every `λ_min/10c`.
    pub dft_stride: Option<usize>,
}

impl Default for RunControl {
    fn default() -> Self {
        Self {
            courant_safety: 0.5,
            max_steps: 200_000,
            decay_threshold: 1e-6,
            check_interval: 20,
            dft_stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub grid: YeeGrid,
    /// Later entries override earlier ones.
    pub shapes: Vec<SceneShape>,
    pub dipole: DipoleSource,
    pub monitors: Vec<MonitorSpec>,
    /// Rod-tip to dipole separation, nm.
    pub d: f64,
    /// Rod length, nm; `None` for the bare fiber.
    pub rod_length: Option<f64>,
    pub fiber_diameter: Option<f64>,
    pub wavelengths: Vec<f64>,
    pub cpml: CpmlParams,
    pub run: RunControl,
}

impl SceneConfig {
    /// Dipole in an otherwise empty box of the given grid.
    pub fn vacuum(grid: YeeGrid, dipole: DipoleSource) -> Self {
        Self {
            grid,
            shapes: Vec::new(),
            dipole,
            monitors: Vec::new(),
            d: 0.0,
            rod_length: None,
            fiber_diameter: None,
            wavelengths: default_wavelengths(),
            cpml: CpmlParams::default(),
            run: RunControl::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.grid
            .validate()
            .map_err(|e| GeometryError::InvalidGeometry(e.to_string()))?;
        if self.d < 0.0 {
            return Err(GeometryError::InvalidGeometry(format!("d = {} < 0", self.d)));
        }
        for s in &self.shapes {
            s.shape.validate()?;
            if s.material.is_dispersive() && s.shape.signed_distance(self.dipole.position) < 0.0 {
                return Err(GeometryError::InvalidGeometry(
                    "dipole lies inside metal".into(),
                ));
            }
        }
        Ok(())
    }

    /// Interior node range `[lo, hi]` per axis, kept `margin` cells clear of the CPML.
    pub fn interior_nodes(&self, margin: usize) -> [(usize, usize); 3] {
        let t = self.cpml.thickness + margin;
        let n = self.grid.extent;
        [(t, n[0] - 1 - t), (t, n[1] - 1 - t), (t, n[2] - 1 - t)]
    }
}

/// Layout knobs for the fiber–rod scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneOptions {
    pub resolution: f64,
    /// Clearance between the outermost structure and the CPML, nm.
    pub margin_nm: f64,
    /// Distance from the scatterer (rod and dipole) to each guided-mode plane, nm.
    pub plane_distance_nm: f64,
    /// Half-width of the square guided-mode planes around the fiber axis, nm.
    pub mode_half_width_nm: Option<f64>,
    /// Dipole height above the fiber surface, nm. Defaults to the rod axis height.
    pub dipole_gap_nm: Option<f64>,
    /// How far the rod axis is pushed into the fiber from tangent contact, nm.
    /// `0` touches the surface; the rod radius centres the rod on it.
    #[serde(default)]
    pub rod_inset_nm: f64,
    /// Clearance of the radiation box around rod and dipole, nm.
    pub radiation_box_margin_nm: f64,
    pub wavelengths: Vec<f64>,
    pub cpml: CpmlParams,
    pub run: RunControl,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            resolution: 5.0,
            margin_nm: 350.0,
            plane_distance_nm: 1000.0,
            mode_half_width_nm: None,
            dipole_gap_nm: None,
            rod_inset_nm: 0.0,
            radiation_box_margin_nm: 50.0,
            wavelengths: default_wavelengths(),
            cpml: CpmlParams::default(),
            run: RunControl::default(),
        }
    }
}

pub const MODE_PLANE_PLUS: &str = "mode_plus";
pub const MODE_PLANE_MINUS: &str = "mode_minus";
pub const RADIATION_BOX: &str = "radiation";

/// Fiber–rod scene with default layout options.
pub fn paper_scene(
    d: f64,
    rod_length: Option<f64>,
    fiber_diameter: f64,
    orientation: [f64; 3],
) -> Result<SceneConfig, GeometryError> {
    paper_scene_with(d, rod_length, fiber_diameter, orientation, &SceneOptions::default())
}

/// Silica fiber along z through the origin, gold capsule parallel to it and
/// touching the fiber at `(0, R, 0)`, dipole on the rod axis `d` beyond the
/// `+z` tip. Without a rod the dipole sits at `z = 0`.
pub fn paper_scene_with(
    d: f64,
    rod_length: Option<f64>,
    fiber_diameter: f64,
    orientation: [f64; 3],
    opts: &SceneOptions,
) -> Result<SceneConfig, GeometryError> {
    if !(d >= 0.0) {
        return Err(GeometryError::InvalidGeometry(format!(
            "dipole separation d = {d} must be >= 0"
        )));
    }
    if !(fiber_diameter > 0.0) {
        return Err(GeometryError::InvalidGeometry("fiber diameter must be > 0".into()));
    }
    if let Some(l) = rod_length {
        if l < ROD_DIAMETER {
            return Err(GeometryError::InvalidGeometry(format!(
                "rod length {l} below the rod diameter"
            )));
        }
    }
    let fr = 0.5 * fiber_diameter;
    let rr = 0.5 * ROD_DIAMETER;
    if !(0.0..=rr).contains(&opts.rod_inset_nm) {
        return Err(GeometryError::InvalidGeometry(format!(
            "rod inset {} nm outside [0, {rr}]",
            opts.rod_inset_nm
        )));
    }
    let rod_y = fr + rr - opts.rod_inset_nm;
    let dip_y = opts.dipole_gap_nm.map_or(rod_y, |g| fr + g);
    let dip_z = rod_length.map_or(0.0, |l| 0.5 * l + d);

    let mut shapes = vec![SceneShape {
        shape: Shape::Cylinder {
            axis: Axis::Z,
            center: [0.0; 3],
            radius: fr,
            length: None,
        },
        material: Material::silica(),
    }];
    // Scatterer extent along z and its bounding box.
    let (mut s_lo, mut s_hi) = ([-rr, dip_y, dip_z], [rr, dip_y, dip_z]);
    if let Some(l) = rod_length {
        let rod = Shape::Capsule {
            axis: Axis::Z,
            center: [0.0, rod_y, 0.0],
            length: l,
            diameter: ROD_DIAMETER,
        };
        let (lo, hi) = rod.bounds().expect("capsule is finite");
        for a in 0..3 {
            s_lo[a] = s_lo[a].min(lo[a]);
            s_hi[a] = s_hi[a].max(hi[a]);
        }
        shapes.push(SceneShape {
            shape: rod,
            material: Material::gold(),
        });
    }

    let res = opts.resolution;
    let t = opts.cpml.thickness;
    // Mode planes sit 4 cells inside the CPML-adjacent margin along z.
    let z_lo = s_lo[2] - opts.plane_distance_nm;
    let z_hi = s_hi[2] + opts.plane_distance_nm;
    let half_x = fr.max(s_hi[0]) + opts.margin_nm;
    let lo = [-half_x, -fr - opts.margin_nm, z_lo];
    let hi = [half_x, fr.max(s_hi[1]) + opts.margin_nm, z_hi];
    let grid = YeeGrid::covering(lo, hi, res, t + 5, [0.0, rod_y, 0.0])
        .map_err(|e| GeometryError::InvalidGeometry(e.to_string()))?;

    let bounds = opts.mode_half_width_nm.map(|w| ([-w, -w], [w, w]));
    let m = opts.radiation_box_margin_nm;
    let monitors = vec![
        MonitorSpec::FluxPlane {
            name: MODE_PLANE_PLUS.into(),
            axis: Axis::Z,
            position: z_hi,
            bounds,
        },
        MonitorSpec::FluxPlane {
            name: MODE_PLANE_MINUS.into(),
            axis: Axis::Z,
            position: z_lo,
            bounds,
        },
        MonitorSpec::FluxBox {
            name: RADIATION_BOX.into(),
            lo: [s_lo[0] - m, s_lo[1] - m, s_lo[2] - m],
            hi: [s_hi[0] + m, s_hi[1] + m, s_hi[2] + m],
        },
    ];

    let mut dipole = DipoleSource::new([0.0, dip_y, dip_z], orientation);
    let n2: f64 = orientation.iter().map(|x| x * x).sum();
    if n2 > 0.0 {
        dipole.orientation = orientation.map(|x| x / n2.sqrt());
    }
    let scene = SceneConfig {
        grid,
        shapes,
        dipole,
        monitors,
        d,
        rod_length,
        fiber_diameter: Some(fiber_diameter),
        wavelengths: opts.wavelengths.clone(),
        cpml: opts.cpml.clone(),
        run: opts.run.clone(),
    };
    scene.validate()?;
    Ok(scene)
}

/// A dispersive Yee edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DispersiveEdge {
    /// 0, 1, 2 for Ex, Ey, Ez.
    pub component: usize,
    pub index: usize,
    /// Index into [`MaterialMap::models`].
    pub model: usize,
}

/// Per-edge material coefficients on a grid.
#[derive(Clone, Debug)]
pub struct MaterialMap<T> {
    pub extent: [usize; 3],
    /// Inverse instantaneous permittivity per E edge.
    pub inv_eps: [Vec<T>; 3],
    /// Dispersive edges in (component, index) order.
    pub dispersive: Vec<DispersiveEdge>,
    pub models: Vec<DrudeLorentzModel>,
}

impl<T: Real> MaterialMap<T> {
    pub fn vacuum(grid: &YeeGrid) -> Self {
        let n = grid.len();
        Self {
            extent: grid.extent,
            inv_eps: [vec![T::one(); n], vec![T::one(); n], vec![T::one(); n]],
            dispersive: Vec::new(),
            models: Vec::new(),
        }
    }

    /// Metal volume, nm³: dispersive edge count per component, averaged.
    pub fn metal_volume(&self, resolution: f64) -> f64 {
        self.dispersive.len() as f64 / 3.0 * resolution.powi(3)
    }

    /// Volume filled by a dielectric of permittivity `eps`, nm³, from the
    /// averaged permittivities (`(ε_edge - 1)/(ε - 1)` per edge).
    pub fn dielectric_volume(&self, eps: f64, resolution: f64) -> f64 {
        let mut total = 0.0;
        for c in 0..3 {
            total += self.inv_eps[c]
                .iter()
                .map(|v| ((1.0 / v.f64() - 1.0) / (eps - 1.0)).clamp(0.0, 1.0))
                .sum::<f64>();
        }
        total / 3.0 * resolution.powi(3)
    }
}

/// Rasterizes the scene shapes onto every E edge of the grid.
pub fn rasterize<T: Real>(scene: &SceneConfig) -> Result<MaterialMap<T>, GeometryError> {
    scene.validate()?;
    let grid = &scene.grid;
    let (glo, ghi) = (grid.lower_corner(), grid.upper_corner());
    for (i, s) in scene.shapes.iter().enumerate() {
        if let Some((lo, hi)) = s.shape.bounds() {
            if (0..3).any(|a| lo[a] < glo[a] || hi[a] > ghi[a]) {
                return Err(GeometryError::OutOfBounds(i));
            }
        }
    }

    let mut models: Vec<DrudeLorentzModel> = Vec::new();
    let mut model_of: Vec<Option<usize>> = Vec::with_capacity(scene.shapes.len());
    for s in &scene.shapes {
        model_of.push(match &s.material {
            Material::Dispersive { model } => Some(match models.iter().position(|m| m == model) {
                Some(i) => i,
                None => {
                    models.push(model.clone());
                    models.len() - 1
                }
            }),
            _ => None,
        });
    }

    let shapes = &scene.shapes;
    let top = |p: [f64; 3]| shapes.iter().rposition(|s| s.shape.contains(p));
    let eps_of = |m: Option<usize>| m.map_or(1.0, |i| shapes[i].material.instantaneous_eps());
    let h = grid.resolution;
    let near = 0.5 * 3f64.sqrt() * h;

    let [nx, ny, nz] = grid.extent;
    let s = ny * nz;
    let mut inv_eps: [Vec<T>; 3] = Default::default();
    let mut dispersive = Vec::new();
    for a in Axis::ALL {
        let comp = Component::electric(a);
        // per x-slab: inverse permittivities and (edge index, pole model) of metal edges
        type Slab<T> = (Vec<T>, Vec<(usize, usize)>);
        let rows: Vec<Slab<T>> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let mut out = vec![T::one(); s];
                let mut metal = Vec::new();
                for j in 0..ny {
                    for k in 0..nz {
                        let p = grid.position(comp, i, j, k);
                        let m0 = top(p);
                        if let Some(m) = m0 {
                            if let Some(model) = model_of[m] {
                                out[j * nz + k] = T::of(1.0 / shapes[m].material.instantaneous_eps());
                                metal.push((grid.idx(i, j, k), model));
                                continue;
                            }
                        }
                        let boundary = shapes.iter().any(|sh| sh.shape.signed_distance(p).abs() < near);
                        let eps = if boundary {
                            supersampled_eps(p, h, &top, &eps_of, &model_of).unwrap_or(eps_of(m0))
                        } else {
                            eps_of(m0)
                        };
                        out[j * nz + k] = T::of(1.0 / eps);
                    }
                }
                (out, metal)
            })
            .collect();
        let mut field = Vec::with_capacity(grid.len());
        for (row, metal) in rows {
            field.extend(row);
            dispersive.extend(metal.into_iter().map(|(index, model)| DispersiveEdge {
                component: a.index(),
                index,
                model,
            }));
        }
        inv_eps[a.index()] = field;
    }
    Ok(MaterialMap {
        extent: grid.extent,
        inv_eps,
        dispersive,
        models,
    })
}

/// Mean permittivity of the non-metal subsamples of the cell centred at `p`.
fn supersampled_eps(
    p: [f64; 3],
    h: f64,
    top: &impl Fn([f64; 3]) -> Option<usize>,
    eps_of: &impl Fn(Option<usize>) -> f64,
    model_of: &[Option<usize>],
) -> Option<f64> {
    let n = SUPERSAMPLE;
    let off = |q: usize| h * ((q as f64 + 0.5) / n as f64 - 0.5);
    let mut sum = 0.0;
    let mut count = 0usize;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let q = [p[0] + off(a), p[1] + off(b), p[2] + off(c)];
                let m = top(q);
                if m.is_some_and(|i| model_of[i].is_some()) {
                    continue;
                }
                sum += eps_of(m);
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capsule_distance_and_volume() {
        let c = Shape::Capsule {
            axis: Axis::Z,
            center: [0.0; 3],
            length: 160.0,
            diameter: 25.0,
        };
        assert!(c.contains([0.0, 0.0, 79.0]));
        assert!(!c.contains([0.0, 0.0, 80.5]));
        assert!((c.signed_distance([0.0, 0.0, 90.0]) - 10.0).abs() < 1e-12);
        assert!((c.signed_distance([20.0, 0.0, 0.0]) - 7.5).abs() < 1e-12);
        let v = std::f64::consts::PI * (12.5f64.powi(2) * 135.0 + 4.0 / 3.0 * 12.5f64.powi(3));
        assert!((c.volume().unwrap() - v).abs() < 1e-6);
    }

    #[test]
    fn block_distance() {
        let b = Shape::Block {
            corner: [0.0; 3],
            size: [2.0, 2.0, 2.0],
        };
        assert_eq!(b.signed_distance([1.0, 1.0, 1.0]), -1.0);
        assert_eq!(b.signed_distance([4.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn scene_rejects_negative_separation() {
        assert!(paper_scene(-1.0, Some(160.0), 530.0, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn dipole_sits_on_rod_axis() {
        let s = paper_scene(25.0, Some(160.0), 530.0, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.dipole.position, [0.0, 277.5, 105.0]);
        let g = &s.grid;
        assert_eq!(g.extent[0] % 2, 1);
        let j = g.nearest_node(Axis::Y, 277.5) as usize;
        assert!((g.coord(Axis::Y, j) - 277.5).abs() < 1e-9);
    }

    #[test]
    fn half_embedded_rod_centres_on_the_surface() {
        let opts = SceneOptions {
            rod_inset_nm: 12.5,
            ..SceneOptions::default()
        };
        let s = paper_scene_with(25.0, Some(160.0), 530.0, [0.0, 0.0, 1.0], &opts).unwrap();
        assert_eq!(s.dipole.position, [0.0, 265.0, 105.0]);
        match &s.shapes[1].shape {
            Shape::Capsule { center, .. } => assert_eq!(*center, [0.0, 265.0, 0.0]),
            other => panic!("{other:?}"),
        }
        let too_deep = SceneOptions {
            rod_inset_nm: 13.0,
            ..SceneOptions::default()
        };
        assert!(paper_scene_with(25.0, Some(160.0), 530.0, [0.0, 0.0, 1.0], &too_deep).is_err());
    }
}
