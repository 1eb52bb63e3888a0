//! Point-dipole sources: pulse shape and current spreading onto Yee edges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{Axis, Component, YeeGrid};
use super::FdtdError;
use crate::units::{fs_to_internal, omega_internal};

/// Gaussian-modulated dipole moment `p(t) = A exp(-(t-t0)²/2σ²) cos(ω0 (t-t0))`.
///
/// The injected current is the discrete time derivative of `p`, so the
/// source deposits no net charge and the fields relax to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub center_wavelength_nm: f64,
    /// Gaussian envelope standard deviation σ, fs.
    pub width_fs: f64,
    pub amplitude: f64,
    /// Envelope centre `t0` in units of σ.
    #[serde(default = "default_delay")]
    pub delay_widths: f64,
}

fn default_delay() -> f64 {
    5.0
}

impl Default for Pulse {
    fn default() -> Self {
        Self {
            center_wavelength_nm: 740.0,
            width_fs: 2.0,
            amplitude: 1.0,
            delay_widths: default_delay(),
        }
    }
}

impl Pulse {
    fn sigma(&self) -> f64 {
        fs_to_internal(self.width_fs)
    }

    fn t0(&self) -> f64 {
        self.delay_widths * self.sigma()
    }

    /// Dipole moment at internal time `t`.
    pub fn moment(&self, t: f64) -> f64 {
        let s = self.sigma();
        let u = t - self.t0();
        self.amplitude
            * (-(u * u) / (2.0 * s * s)).exp()
            * (omega_internal(self.center_wavelength_nm) * u).cos()
    }

    /// Time after which the source is negligible.
    pub fn end_time(&self) -> f64 {
        2.0 * self.t0()
    }

    /// Continuous-time current spectrum magnitude `|ω p̃(ω)|` (unnormalised).
    pub fn spectral_amplitude(&self, wavelength_nm: f64) -> f64 {
        let s = self.sigma();
        let w = omega_internal(wavelength_nm);
        let w0 = omega_internal(self.center_wavelength_nm);
        let g = |d: f64| (-(s * s * d * d) / 2.0).exp();
        w * 0.5 * (g(w - w0) + g(w + w0)) * self.amplitude * s * (2.0 * PI).sqrt()
    }

    /// Smallest spectral amplitude over `[lo, hi]` relative to the peak.
    pub fn relative_coverage(&self, lo_nm: f64, hi_nm: f64) -> f64 {
        let peak = (1..4000)
            .map(|i| self.spectral_amplitude(100.0 + i as f64))
            .fold(0.0, f64::max);
        let n = 301;
        (0..n)
            .map(|i| lo_nm + (hi_nm - lo_nm) * i as f64 / (n - 1) as f64)
            .map(|l| self.spectral_amplitude(l) / peak)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A point dipole with a prescribed current waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleSource {
    /// Physical position, nm. Need not lie on the lattice.
    pub position: [f64; 3],
    /// Unit orientation vector.
    pub orientation: [f64; 3],
    pub pulse: Pulse,
    /// Hard sources overwrite the field; soft sources add a current.
    #[serde(default)]
    pub hard: bool,
}

impl DipoleSource {
    pub fn new(position: [f64; 3], orientation: [f64; 3]) -> Self {
        Self {
            position,
            orientation,
            pulse: Pulse::default(),
            hard: false,
        }
    }

    pub fn along(position: [f64; 3], axis: Axis) -> Self {
        Self::new(position, axis.unit())
    }

    pub fn validate(&self) -> Result<(), FdtdError> {
        let n2: f64 = self.orientation.iter().map(|x| x * x).sum();
        if (n2.sqrt() - 1.0).abs() > 1e-9 {
            return Err(FdtdError::InvalidParameter(format!(
                "dipole orientation {:?} is not a unit vector",
                self.orientation
            )));
        }
        if self.hard {
            return Err(FdtdError::InvalidParameter(
                "hard dipole sources cannot be used for spectral power normalisation".into(),
            ));
        }
        let cov = self.pulse.relative_coverage(600.0, 900.0);
        if cov < 0.01 {
            return Err(FdtdError::InvalidParameter(format!(
                "pulse spectrum falls to {cov:.2e} of peak inside 600–900 nm"
            )));
        }
        Ok(())
    }
}

/// Trilinear interpolation weights of a point onto the lattice of `comp`.
///
/// The same stencil spreads a point current onto edges and gathers the
/// field at a point, so source power and probe readings are consistent.
pub fn trilinear_stencil(
    grid: &YeeGrid,
    comp: Component,
    p: [f64; 3],
) -> Result<Vec<(usize, f64)>, FdtdError> {
    let c = grid.lattice_coords(comp, p);
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let f = c[a].floor();
        if f < 1.0 || f as usize + 2 >= grid.extent[a] {
            return Err(FdtdError::InvalidParameter(format!(
                "point {p:?} too close to the grid boundary"
            )));
        }
        base[a] = f as usize;
        frac[a] = c[a] - f;
    }
    let mut out = Vec::with_capacity(8);
    for di in 0..2 {
        for dj in 0..2 {
            for dk in 0..2 {
                let w = (if di == 0 { 1.0 - frac[0] } else { frac[0] })
                    * (if dj == 0 { 1.0 - frac[1] } else { frac[1] })
                    * (if dk == 0 { 1.0 - frac[2] } else { frac[2] });
                if w > 1e-12 {
                    out.push((grid.idx(base[0] + di, base[1] + dj, base[2] + dk), w));
                }
            }
        }
    }
    Ok(out)
}

/// Edge weights of one dipole for all three E components.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceStencil {
    /// Per component: `(flat index, orientation_component * trilinear weight)`.
    pub edges: [Vec<(usize, f64)>; 3],
    /// Pure trilinear weights per component (orientation not applied), used
    /// to read back the local field along each axis.
    pub gather: [Vec<(usize, f64)>; 3],
}

impl SourceStencil {
    pub fn new(grid: &YeeGrid, src: &DipoleSource) -> Result<Self, FdtdError> {
        let mut edges: [Vec<(usize, f64)>; 3] = Default::default();
        let mut gather: [Vec<(usize, f64)>; 3] = Default::default();
        for a in Axis::ALL {
            let st = trilinear_stencil(grid, Component::electric(a), src.position)?;
            let o = src.orientation[a.index()];
            if o != 0.0 {
                edges[a.index()] = st.iter().map(|&(i, w)| (i, w * o)).collect();
            }
            gather[a.index()] = st;
        }
        Ok(Self { edges, gather })
    }
}
