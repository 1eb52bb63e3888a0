//! Convolutional PML (Roden & Gedney recursive-convolution form).
//!
//! For every derivative `∂_a F` evaluated inside a PML slab along axis `a`
//! the update adds `(1/κ - 1) ∂_a F + ψ`, where
//! `ψ ← b ψ + c ∂_a F`, `b = exp(-(σ/κ + α) dt)` and
//! `c = σ (b - 1) / (σ κ + κ² α)`.

use serde::{Deserialize, Serialize};

use super::grid::{Axis, YeeGrid};
use super::FdtdError;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpmlParams {
    /// Layer thickness in cells on every face.
    pub thickness: usize,
    /// Polynomial grading order.
    pub order: f64,
    /// Peak conductivity relative to the optimal `0.8 (m+1) / Δ`.
    pub sigma_max_factor: f64,
    pub kappa_max: f64,
    /// Peak complex-frequency shift in units of `c/Δ`, graded linearly to 0 at the outer wall.
    pub alpha_max: f64,
}

impl Default for CpmlParams {
    fn default() -> Self {
        Self {
            thickness: 10,
            order: 3.0,
            sigma_max_factor: 1.0,
            kappa_max: 1.0,
            alpha_max: 0.01,
        }
    }
}

impl CpmlParams {
    pub fn validate(&self) -> Result<(), FdtdError> {
        if self.thickness < 8 {
            return Err(FdtdError::InvalidParameter(format!(
                "CPML thickness {} < 8 cells",
                self.thickness
            )));
        }
        if !(2.0..=4.0).contains(&self.order) {
            return Err(FdtdError::InvalidParameter(format!(
                "CPML grading order {} outside [2, 4]",
                self.order
            )));
        }
        if self.sigma_max_factor < 0.0 || self.kappa_max < 1.0 || self.alpha_max < 0.0 {
            return Err(FdtdError::InvalidParameter(
                "CPML sigma/alpha must be >= 0 and kappa >= 1".into(),
            ));
        }
        Ok(())
    }

    /// (κ, b, c) at depth `rho` (cells, measured from the inner PML face
    /// toward the wall) for time step `dt`.
    fn coefficients(&self, rho: f64, resolution: f64, dt: f64) -> (f64, f64, f64) {
        let d = self.thickness as f64;
        let x = (rho / d).clamp(0.0, 1.0);
        let sigma_max = self.sigma_max_factor * 0.8 * (self.order + 1.0) / resolution;
        let sigma = sigma_max * x.powf(self.order);
        let kappa = 1.0 + (self.kappa_max - 1.0) * x.powf(self.order);
        let alpha = self.alpha_max / resolution * (1.0 - x);
        let b = (-(sigma / kappa + alpha) * dt).exp();
        let denom = sigma * kappa + kappa * kappa * alpha;
        let c = if denom > 0.0 { sigma * (b - 1.0) / denom } else { 0.0 };
        (kappa, b, c)
    }
}

/// Graded coefficients for one axis, tabulated for every node index.
///
/// `e_*` are sampled at integer positions (where the backward differences
/// feeding E live), `h_*` at half-integer positions.
#[derive(Clone, Debug)]
pub struct AxisProfile<T> {
    pub thickness: usize,
    pub n: usize,
    pub e_inv_kappa_m1: Vec<T>,
    pub e_b: Vec<T>,
    pub e_c: Vec<T>,
    pub h_inv_kappa_m1: Vec<T>,
    pub h_b: Vec<T>,
    pub h_c: Vec<T>,
}

impl<T: Real> AxisProfile<T> {
    fn new(params: &CpmlParams, n: usize, resolution: f64, dt: f64) -> Self {
        let t = params.thickness;
        let inner_lo = t as f64;
        let inner_hi = (n - 1 - t) as f64;
        let depth = |x: f64| {
            if x < inner_lo {
                inner_lo - x
            } else if x > inner_hi {
                x - inner_hi
            } else {
                0.0
            }
        };
        let mut p = Self {
            thickness: t,
            n,
            e_inv_kappa_m1: vec![T::zero(); n],
            e_b: vec![T::zero(); n],
            e_c: vec![T::zero(); n],
            h_inv_kappa_m1: vec![T::zero(); n],
            h_b: vec![T::zero(); n],
            h_c: vec![T::zero(); n],
        };
        for i in 0..n {
            let (k, b, c) = params.coefficients(depth(i as f64), resolution, dt);
            p.e_inv_kappa_m1[i] = T::of(1.0 / k - 1.0);
            p.e_b[i] = T::of(b);
            p.e_c[i] = T::of(c);
            let (k, b, c) = params.coefficients(depth(i as f64 + 0.5), resolution, dt);
            p.h_inv_kappa_m1[i] = T::of(1.0 / k - 1.0);
            p.h_b[i] = T::of(b);
            p.h_c[i] = T::of(c);
        }
        p
    }

    /// Node ranges of the two slabs, `[0, t]` and `[n-1-t, n)`.
    pub fn slabs(&self) -> [(usize, usize); 2] {
        let t = self.thickness;
        [(0, t + 1), (self.n - 1 - t, self.n)]
    }
}

/// Immutable CPML coefficients for a grid and time step.
#[derive(Clone, Debug)]
pub struct CpmlProfile<T> {
    pub params: CpmlParams,
    pub axes: [AxisProfile<T>; 3],
}

impl<T: Real> CpmlProfile<T> {
    pub fn new(params: &CpmlParams, grid: &YeeGrid, dt: f64) -> Result<Self, FdtdError> {
        params.validate()?;
        for &n in &grid.extent {
            if n < 2 * params.thickness + 4 {
                return Err(FdtdError::InvalidGrid(format!(
                    "extent {n} cannot hold two CPML layers of {} cells",
                    params.thickness
                )));
            }
        }
        let mk = |a: Axis| AxisProfile::new(params, grid.extent[a.index()], grid.resolution, dt);
        Ok(Self {
            params: params.clone(),
            axes: [mk(Axis::X), mk(Axis::Y), mk(Axis::Z)],
        })
    }

    pub fn thickness(&self) -> usize {
        self.params.thickness
    }
}

/// Convolution memory for one slab-pair along one axis: the two field
/// components whose curl contains a derivative along that axis, for both E and H.
#[derive(Clone, Debug)]
pub struct SlabPsi<T> {
    /// Shape of one slab: extents with the slab axis replaced by its thickness.
    pub shape: [usize; 3],
    /// [lo, hi] slab × [first, second transverse component].
    pub e: [[Vec<T>; 2]; 2],
    pub h: [[Vec<T>; 2]; 2],
}

/// All CPML convolution memories.
#[derive(Clone, Debug)]
pub struct CpmlFields<T> {
    pub axes: [SlabPsi<T>; 3],
}

impl<T: Real> CpmlFields<T> {
    pub fn new(grid: &YeeGrid, thickness: usize) -> Self {
        let mk = |a: Axis| {
            let mut shape = grid.extent;
            shape[a.index()] = thickness + 1;
            let len = shape.iter().product::<usize>();
            let z = || vec![T::zero(); len];
            SlabPsi {
                shape,
                e: [[z(), z()], [z(), z()]],
                h: [[z(), z()], [z(), z()]],
            }
        };
        Self {
            axes: [mk(Axis::X), mk(Axis::Y), mk(Axis::Z)],
        }
    }

    pub fn zero(&mut self) {
        for ax in &mut self.axes {
            for s in ax.e.iter_mut().chain(ax.h.iter_mut()) {
                for v in s.iter_mut() {
                    v.fill(T::zero());
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        CpmlParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_thin_or_badly_graded_layers() {
        let thin = CpmlParams {
            thickness: 6,
            ..Default::default()
        };
        assert!(thin.validate().is_err());
        let steep = CpmlParams {
            order: 5.0,
            ..Default::default()
        };
        assert!(steep.validate().is_err());
    }

    #[test]
    fn interior_is_transparent_and_wall_is_lossy() {
        let grid = YeeGrid::new([40, 40, 40], 5.0, [0.0; 3]).unwrap();
        let dt = grid.courant_dt_internal(0.5);
        let prof: CpmlProfile<f64> = CpmlProfile::new(&CpmlParams::default(), &grid, dt).unwrap();
        let x = &prof.axes[0];
        assert_eq!(x.e_c[20], 0.0);
        assert!(x.e_b[0] < x.e_b[5]);
        assert!(x.e_c[0] < 0.0);
        assert!(x.h_c[38] < x.h_c[33]);
    }
}
