//! HE11 mode of a step-index fiber in vacuum and projection of monitor
//! fields onto it.
//!
//! Fields follow `e^{i(βz + lφ - ωt)}` with `l = ±1`; the two linear
//! polarizations are the even and odd combinations of `l = +1` and `l = -1`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use puruspe::{besselik, besseljy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fdtd::Axis;
use crate::geometry::SILICA_INDEX;
use crate::monitors::{DftMonitor, RegionKind, Spectrum};
use crate::units::omega_internal;

/// First zero of J0: above it the fiber guides more than HE11.
pub const SINGLE_MODE_CUTOFF: f64 = 2.404_825_557_695_773;
/// Minimum distance between a projection plane and the scatterer, nm.
pub const MIN_PLANE_DISTANCE_NM: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("no HE11 root: {0}")]
    NoRoot(String),
    #[error("invalid projection plane: {0}")]
    InvalidPlane(String),
    #[error("wavelength grid mismatch between modes and monitor")]
    GridMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreIndex {
    /// Malitson's fused-silica Sellmeier law.
    SellmeierSilica,
    Constant { index: f64 },
}

impl CoreIndex {
    pub fn at(&self, wavelength_nm: f64) -> f64 {
        match *self {
            CoreIndex::SellmeierSilica => sellmeier_silica(wavelength_nm),
            CoreIndex::Constant { index } => index,
        }
    }
}

/// Malitson (1965) fused silica, valid 210–3710 nm.
pub fn sellmeier_silica(wavelength_nm: f64) -> f64 {
    let l2 = (wavelength_nm * 1e-3).powi(2);
    let terms = [
        (0.696_166_3, 0.068_404_3),
        (0.407_942_6, 0.116_241_4),
        (0.897_479_4, 9.896_161),
    ];
    let s: f64 = terms.iter().map(|&(b, c)| b * l2 / (l2 - c * c)).sum();
    (1.0 + s).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub diameter: f64,
    pub core: CoreIndex,
    pub cladding_index: f64,
}

impl FiberSpec {
    /// Dispersive silica in vacuum.
    pub fn silica(diameter: f64) -> Self {
        Self {
            diameter,
            core: CoreIndex::SellmeierSilica,
            cladding_index: 1.0,
        }
    }

    /// Nondispersive silica matching the time-domain model.
    pub fn simulated(diameter: f64) -> Self {
        Self {
            diameter,
            core: CoreIndex::Constant {
                index: SILICA_INDEX,
            },
            cladding_index: 1.0,
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn v_number(&self, wavelength_nm: f64) -> f64 {
        let n1 = self.core.at(wavelength_nm);
        omega_internal(wavelength_nm) * self.radius() * (n1 * n1 - self.cladding_index.powi(2)).sqrt()
    }
}

/// J1, J1', K1, K1' at the given arguments.
fn bessel1(u: f64, w: f64) -> (f64, f64, f64, f64) {
    let (j, _, jp, _) = besseljy(1.0, u);
    let (_, k, _, kp) = besselik(1.0, w);
    (j, jp, k, kp)
}

/// HE11 characteristic function at `U = a·sqrt(k²n1² - β²)`, `W = a·sqrt(β² - k²n2²)`.
fn characteristic(u: f64, w: f64, n1: f64, n2: f64, k: f64, a: f64) -> f64 {
    let n = (n2 * n2 + (w / (k * a)).powi(2)).sqrt();
    let (j1, j1p, k1, k1p) = bessel1(u, w);
    let j0 = j1p + j1 / u;
    let kk = k1p / (w * k1);
    let d = (n1 * n1 - n2 * n2) / (2.0 * n1 * n1);
    let r = (d * d * kk * kk + (n / n1).powi(2) * (1.0 / (w * w) + 1.0 / (u * u)).powi(2)).sqrt();
    j0 / (u * j1) + (n1 * n1 + n2 * n2) / (2.0 * n1 * n1) * kk - 1.0 / (u * u) + r
}

/// Solved HE11 mode at one wavelength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidedMode {
    pub wavelength: f64,
    pub n_eff: f64,
    pub core_index: f64,
    pub cladding_index: f64,
    pub radius: f64,
    pub v_number: f64,
    /// Characteristic-equation residual at `n_eff`.
    pub residual: f64,
    /// `V > 2.405`: higher-order modes also propagate.
    pub multimode: bool,
    u: f64,
    w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    /// Even combination, E mostly along x on the axis.
    X,
    /// Odd combination, E mostly along y on the axis.
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Towards +z.
    Forward,
    /// Towards −z.
    Backward,
}

/// Cartesian complex field pair.
pub type FieldPair = ([Complex64; 3], [Complex64; 3]);

pub fn solve_he11(fiber: &FiberSpec, wavelength_nm: f64) -> Result<GuidedMode, FiberError> {
    let n1 = fiber.core.at(wavelength_nm);
    let n2 = fiber.cladding_index;
    let a = fiber.radius();
    if !(wavelength_nm > 0.0) || !(a > 0.0) || !(n1 > n2) || !(n2 >= 1.0) {
        return Err(FiberError::NoRoot(format!(
            "need wavelength > 0, radius > 0 and n_core {n1} > n_clad {n2} >= 1"
        )));
    }
    let k = omega_internal(wavelength_nm);
    let v = k * a * (n1 * n1 - n2 * n2).sqrt();
    // The root is bracketed in W on a log grid: for weak guidance it sits at
    // exponentially small W, where a linear grid in U cannot resolve it.
    // Below ~1e-6 V the leading 1/W² terms cancel to roundoff.
    let w_floor = (v * v - SINGLE_MODE_CUTOFF.powi(2)).max(0.0).sqrt();
    let w_lo = w_floor.max(1e-6 * v) * (1.0 + 1e-9);
    let w_hi = v * (1.0 - 1e-9);
    let f = |w: f64| characteristic((v * v - w * w).sqrt(), w, n1, n2, k, a);

    let samples = 600;
    let at = |i: usize| w_lo * (w_hi / w_lo).powf(i as f64 / samples as f64);
    let mut bracket = None;
    let mut prev = (at(0), f(at(0)));
    for i in 1..=samples {
        let x = at(i);
        let y = f(x);
        if prev.1 < 0.0 && y > 0.0 && y.is_finite() {
            bracket = Some((prev.0, x, prev.1));
            break;
        }
        prev = (x, y);
    }
    let (mut lo, mut hi, flo) = bracket.ok_or_else(|| {
        FiberError::NoRoot(format!("no sign change for V = {v:.4} at {wavelength_nm} nm"))
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo_v, fhi_v) = (f(lo), f(hi));
    let w = if flo_v.abs() <= fhi_v.abs() { lo } else { hi };
    let residual = flo_v.abs().min(fhi_v.abs());
    let n_eff = (n2 * n2 + (w / (k * a)).powi(2)).sqrt();
    Ok(GuidedMode {
        wavelength: wavelength_nm,
        n_eff,
        core_index: n1,
        cladding_index: n2,
        radius: a,
        v_number: v,
        residual,
        multimode: v > SINGLE_MODE_CUTOFF,
        u: (v * v - w * w).sqrt(),
        w,
    })
}

/// Modes on a wavelength grid.
pub fn solve_he11_grid(fiber: &FiberSpec, wavelengths: &[f64]) -> Result<Vec<GuidedMode>, FiberError> {
    wavelengths.iter().map(|&l| solve_he11(fiber, l)).collect()
}

impl GuidedMode {
    pub fn beta(&self) -> f64 {
        self.n_eff * omega_internal(self.wavelength)
    }

    /// `Hz` amplitude for `Ez = J1(hr) e^{ilφ}` in the core, from continuity of `E_φ`.
    fn hz_coefficient(&self, l: f64) -> Complex64 {
        let a = self.radius;
        let (h, q) = (self.u / a, self.w / a);
        let beta = self.beta();
        let omega = omega_internal(self.wavelength);
        let (j, jp, k, kp) = bessel1(self.u, self.w);
        let i = Complex64::i();
        let num = beta * i * l / a * j * (1.0 / (h * h) + 1.0 / (q * q));
        num / (omega * (jp / h + j * kp / (q * k)))
    }

    /// Cylindrical `(E_r, E_φ, E_z), (H_r, H_φ, H_z)` of the `l` component at radius `r`,
    /// without the `e^{ilφ}` factor.
    pub fn cylindrical(&self, l: f64, r: f64) -> FieldPair {
        let a = self.radius;
        let r = r.max(1e-9 * a);
        let (h, q) = (self.u / a, self.w / a);
        let beta = self.beta();
        let omega = omega_internal(self.wavelength);
        let b = self.hz_coefficient(l);
        let i = Complex64::i();
        let (ez, dez, hz, dhz, kt2, eps) = if r < a {
            let (j, _, jp, _) = besseljy(1.0, h * r);
            (
                Complex64::new(j, 0.0),
                Complex64::new(h * jp, 0.0),
                b * j,
                b * h * jp,
                h * h,
                self.core_index.powi(2),
            )
        } else {
            let (j_a, _, _, _) = besseljy(1.0, self.u);
            let (_, k_a, _, _) = besselik(1.0, self.w);
            let (_, kr, _, kpr) = besselik(1.0, q * r);
            let s = j_a / k_a;
            (
                Complex64::new(s * kr, 0.0),
                Complex64::new(s * q * kpr, 0.0),
                b * s * kr,
                b * s * q * kpr,
                -q * q,
                self.cladding_index.powi(2),
            )
        };
        let il_r = i * l / r;
        let pre = i / kt2;
        let er = pre * (beta * dez + omega * il_r * hz);
        let ephi = pre * (beta * il_r * ez - omega * dhz);
        let hr = pre * (beta * dhz - omega * eps * il_r * ez);
        let hphi = pre * (beta * il_r * hz + omega * eps * dez);
        ([er, ephi, ez], [hr, hphi, hz])
    }

    /// Cartesian fields of a linear polarization at transverse point `(x, y)`.
    pub fn field(&self, pol: Polarization, direction: Direction, x: f64, y: f64) -> FieldPair {
        let r = x.hypot(y);
        let phi = y.atan2(x);
        let (c, s) = (phi.cos(), phi.sin());
        let cart = |l: f64| {
            let (e, h) = self.cylindrical(l, r);
            let ph = Complex64::from_polar(1.0, l * phi);
            let to = |v: [Complex64; 3]| [(v[0] * c - v[1] * s) * ph, (v[0] * s + v[1] * c) * ph, v[2] * ph];
            (to(e), to(h))
        };
        let (ep, hp) = cart(1.0);
        let (em, hm) = cart(-1.0);
        let i = Complex64::i();
        let combine = |p: Complex64, m: Complex64| match pol {
            Polarization::X => 0.5 * (p + m),
            Polarization::Y => (p - m) / (2.0 * i),
        };
        let mut e = [Complex64::default(); 3];
        let mut h = [Complex64::default(); 3];
        for d in 0..3 {
            e[d] = combine(ep[d], em[d]);
            h[d] = combine(hp[d], hm[d]);
        }
        if direction == Direction::Backward {
            // (E_t, -H_t, -E_z, H_z)
            h[0] = -h[0];
            h[1] = -h[1];
            e[2] = -e[2];
        }
        (e, h)
    }

    /// Radial profile of the `l = +1` component (magnitudes) as CSV.
    pub fn write_profile_csv<W: Write>(&self, w: W, r_max: f64, points: usize) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r_nm", "e_r", "e_phi", "e_z", "h_r", "h_phi", "h_z"])?;
        for n in 0..points {
            let r = r_max * n as f64 / (points.max(2) - 1) as f64;
            let (e, h) = self.cylindrical(1.0, r);
            let mut row = vec![format!("{r}")];
            row.extend(e.iter().chain(h.iter()).map(|c| format!("{:e}", c.norm())));
            wr.write_record(row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_profile_csv(&self, path: impl AsRef<Path>, r_max: f64, points: usize) -> csv::Result<()> {
        self.write_profile_csv(std::fs::File::create(path)?, r_max, points)
    }
}

/// Per-wavelength result of a projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeProjection {
    /// Power carried by the guided mode, both polarizations.
    pub power: Spectrum,
    /// `power / normalization`.
    pub fraction: Spectrum,
    pub plane_too_close: bool,
}

/// Guided power of each polarization for one wavelength index.
fn project_one(plane: &DftMonitor, mode: &GuidedMode, w: usize, direction: Direction, area: f64) -> f64 {
    let face = &plane.faces[0];
    let mut total = 0.0;
    for pol in [Polarization::X, Polarization::Y] {
        // a = ¼ Σ w (E×Hm* ± Em*×H)·z, N = ½ Re Σ w (Em×Hm*)·z
        let mut a = Complex64::default();
        let mut norm = 0.0;
        let sgn = if direction == Direction::Forward { 1.0 } else { -1.0 };
        for (s, set) in face.sets.iter().enumerate() {
            let n = set.idx.len();
            // set 0 holds (Ex, Hy) and enters with +; set 1 holds (Ey, Hx) with −.
            let (ec, hc, sign) = if s == 0 { (0, 1, 1.0) } else { (1, 0, -1.0) };
            for p in 0..n {
                let pos = set.pos[p];
                let (em, hm) = mode.field(pol, Direction::Forward, pos[0], pos[1]);
                let e = set.e[w * n + p];
                let h = set.h[w * n + p];
                let wt = set.weight[p] * sign;
                a += wt * (sgn * e * hm[hc].conj() + em[ec].conj() * h);
                norm += wt * (em[ec] * hm[hc].conj()).re;
            }
        }
        let a = 0.25 * a * area;
        let norm = 0.5 * norm * area;
        if norm > 0.0 {
            total += a.norm_sqr() / norm;
        }
    }
    total
}

/// Projects the DFT fields on a z-normal plane onto the HE11 mode.
///
/// `normalization` is the power the fractions are relative to (the source
/// power). `scatterer_distance_nm`, when known, raises the
/// `plane_too_close` flag below [`MIN_PLANE_DISTANCE_NM`].
pub fn overlap_coupling(
    plane: &DftMonitor,
    modes: &[GuidedMode],
    direction: Direction,
    resolution: f64,
    normalization: &Spectrum,
    scatterer_distance_nm: Option<f64>,
) -> Result<ModeProjection, FiberError> {
    if plane.kind != RegionKind::Plane || plane.faces.len() != 1 || plane.faces[0].axis != Axis::Z {
        return Err(FiberError::InvalidPlane(format!(
            "monitor {} is not a z-normal plane",
            plane.name
        )));
    }
    let nw = plane.wavelengths.len();
    if modes.len() != nw
        || normalization.wavelengths != plane.wavelengths
        || modes
            .iter()
            .zip(&plane.wavelengths)
            .any(|(m, l)| (m.wavelength - l).abs() > 1e-9)
    {
        return Err(FiberError::GridMismatch);
    }
    let area = resolution * resolution;
    let power: Vec<f64> = (0..nw)
        .map(|w| project_one(plane, &modes[w], w, direction, area))
        .collect();
    let fraction = power
        .iter()
        .zip(&normalization.values)
        .map(|(p, n)| if *n > 0.0 { p / n } else { 0.0 })
        .collect();
    Ok(ModeProjection {
        power: Spectrum::new(plane.wavelengths.clone(), power),
        fraction: Spectrum::new(plane.wavelengths.clone(), fraction),
        plane_too_close: scatterer_distance_nm.is_some_and(|d| d < MIN_PLANE_DISTANCE_NM),
    })
}

/// Guided power fraction of a unit-power mode for quick checks: `2π∫ S_z r dr`
/// inside the core over the total, by midpoint quadrature.
pub fn core_power_fraction(mode: &GuidedMode, r_max: f64, points: usize) -> f64 {
    let dr = r_max / points as f64;
    let (mut inside, mut total) = (0.0, 0.0);
    for n in 0..points {
        let r = (n as f64 + 0.5) * dr;
        let (e, h) = mode.cylindrical(1.0, r);
        let sz = 0.5 * (e[0] * h[1].conj() - e[1] * h[0].conj()).re * 2.0 * PI * r * dr;
        total += sz;
        if r < mode.radius {
            inside += sz;
        }
    }
    inside / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sellmeier_matches_reference_values() {
        assert!((sellmeier_silica(775.0) - 1.4537).abs() < 1e-4);
        assert!((sellmeier_silica(800.0) - 1.4533).abs() < 1e-4);
    }

    #[test]
    fn he11_at_800_nm() {
        let m = solve_he11(&FiberSpec::silica(530.0), 800.0).unwrap();
        assert!(m.n_eff > 1.0 && m.n_eff < 1.4533);
        assert!(m.residual < 1e-10, "{}", m.residual);
        assert!(!m.multimode);
    }

    #[test]
    fn tangential_h_is_continuous() {
        let m = solve_he11(&FiberSpec::simulated(530.0), 760.0).unwrap();
        let (_, hi) = m.cylindrical(1.0, m.radius * (1.0 - 1e-9));
        let (_, ho) = m.cylindrical(1.0, m.radius * (1.0 + 1e-9));
        assert!((hi[1] - ho[1]).norm() < 1e-6 * hi[1].norm());
        assert!((hi[2] - ho[2]).norm() < 1e-6 * hi[2].norm());
    }

    #[test]
    fn long_wavelength_is_weakly_guided() {
        let m = solve_he11(&FiberSpec::simulated(530.0), 3000.0).unwrap();
        assert!(m.n_eff > 1.0 && m.n_eff < 1.0001, "{}", m.n_eff);
    }

    #[test]
    fn thick_fiber_is_multimode() {
        let m = solve_he11(&FiberSpec::silica(900.0), 600.0).unwrap();
        assert!(m.v_number > SINGLE_MODE_CUTOFF);
        assert!(m.multimode);
    }
}
