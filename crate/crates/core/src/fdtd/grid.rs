use serde::{Deserialize, Serialize};

use super::FdtdError;
use crate::units::C_NM_PER_FS;

/// Minimum number of cells along every axis.
pub const MIN_EXTENT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two remaining axes in cyclic order, so that `(u, v, self)` is right-handed.
    pub fn transverse(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut u = [0.0; 3];
        u[self.index()] = 1.0;
        u
    }
}

/// Field components on the Yee lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    pub fn electric(axis: Axis) -> Self {
        [Component::Ex, Component::Ey, Component::Ez][axis.index()]
    }

    pub fn magnetic(axis: Axis) -> Self {
        [Component::Hx, Component::Hy, Component::Hz][axis.index()]
    }

    pub fn axis(self) -> Axis {
        match self {
            Component::Ex | Component::Hx => Axis::X,
            Component::Ey | Component::Hy => Axis::Y,
            Component::Ez | Component::Hz => Axis::Z,
        }
    }

    pub fn is_electric(self) -> bool {
        matches!(self, Component::Ex | Component::Ey | Component::Ez)
    }

    /// Position of sample `(0,0,0)` of this component in units of cells.
    ///
    /// E components sit at edge midpoints, H components at face centres.
    pub fn offset(self) -> [f64; 3] {
        let a = self.axis().index();
        let mut o = if self.is_electric() { [0.0; 3] } else { [0.5; 3] };
        o[a] = if self.is_electric() { 0.5 } else { 0.0 };
        o
    }
}

/// Uniform Yee grid. Node `(i, j, k)` sits at `origin + resolution * (i, j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YeeGrid {
    pub extent: [usize; 3],
    /// Cell size in nm.
    pub resolution: f64,
    /// Physical position of node (0,0,0) in nm.
    pub origin: [f64; 3],
}

impl YeeGrid {
    pub fn new(extent: [usize; 3], resolution: f64, origin: [f64; 3]) -> Result<Self, FdtdError> {
        let grid = Self {
            extent,
            resolution,
            origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Smallest grid of the given resolution whose nodes cover `[lo, hi]`,
    /// padded by `pad_cells` on every side. Node 0 is placed so that the
    /// coordinate `anchor` falls exactly on a node.
    pub fn covering(
        lo: [f64; 3],
        hi: [f64; 3],
        resolution: f64,
        pad_cells: usize,
        anchor: [f64; 3],
    ) -> Result<Self, FdtdError> {
        let mut extent = [0usize; 3];
        let mut origin = [0.0; 3];
        for a in 0..3 {
            let below = ((anchor[a] - lo[a]) / resolution).ceil().max(0.0) as usize + pad_cells;
            let above = ((hi[a] - anchor[a]) / resolution).ceil().max(0.0) as usize + pad_cells;
            extent[a] = below + above + 1;
            origin[a] = anchor[a] - below as f64 * resolution;
        }
        Self::new(extent, resolution, origin)
    }

    pub fn validate(&self) -> Result<(), FdtdError> {
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return Err(FdtdError::InvalidGrid(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if let Some(n) = self.extent.iter().find(|&&n| n < MIN_EXTENT) {
            return Err(FdtdError::InvalidGrid(format!(
                "extent {n} below the minimum of {MIN_EXTENT} cells"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.extent[0] * self.extent[1] * self.extent[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [self.extent[1] * self.extent[2], self.extent[2], 1]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.extent[1] + j) * self.extent[2] + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let d = self.resolution;
        [
            self.origin[0] + d * i as f64,
            self.origin[1] + d * j as f64,
            self.origin[2] + d * k as f64,
        ]
    }

    /// Physical position of sample `(i, j, k)` of `comp`.
    pub fn position(&self, comp: Component, i: usize, j: usize, k: usize) -> [f64; 3] {
        let o = comp.offset();
        let d = self.resolution;
        [
            self.origin[0] + d * (i as f64 + o[0]),
            self.origin[1] + d * (j as f64 + o[1]),
            self.origin[2] + d * (k as f64 + o[2]),
        ]
    }

    /// Fractional lattice coordinates of a physical point for `comp`.
    pub fn lattice_coords(&self, comp: Component, p: [f64; 3]) -> [f64; 3] {
        let o = comp.offset();
        let d = self.resolution;
        [
            (p[0] - self.origin[0]) / d - o[0],
            (p[1] - self.origin[1]) / d - o[1],
            (p[2] - self.origin[2]) / d - o[2],
        ]
    }

    /// Physical coordinate of node index `n` along `axis`.
    pub fn coord(&self, axis: Axis, n: usize) -> f64 {
        self.origin[axis.index()] + self.resolution * n as f64
    }

    /// Nearest node index along `axis` for a physical coordinate.
    pub fn nearest_node(&self, axis: Axis, x: f64) -> isize {
        ((x - self.origin[axis.index()]) / self.resolution).round() as isize
    }

    pub fn lower_corner(&self) -> [f64; 3] {
        self.origin
    }

    pub fn upper_corner(&self) -> [f64; 3] {
        let d = self.resolution;
        [
            self.origin[0] + d * (self.extent[0] - 1) as f64,
            self.origin[1] + d * (self.extent[1] - 1) as f64,
            self.origin[2] + d * (self.extent[2] - 1) as f64,
        ]
    }

    /// Stable time step in internal units (nm/c).
    pub fn courant_dt_internal(&self, safety: f64) -> f64 {
        safety * self.resolution / 3f64.sqrt()
    }
}

/// Courant-limited time step in femtoseconds: `safety * resolution / (c * sqrt(3))`.
pub fn courant_dt(grid: &YeeGrid, safety: f64) -> f64 {
    debug_assert!(safety > 0.0 && safety <= 1.0);
    grid.courant_dt_internal(safety) / C_NM_PER_FS
}
