use crate::error::{Error, Result};
use crate::field::Field2D;

/// Structured vertical cross-section. `x` is horizontal, `z` is depth (positive downward).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nz: usize,
    /// Horizontal cell size (m).
    pub dx: f64,
    /// Vertical cell size (m).
    pub dz: f64,
    /// Out-of-plane thickness of the section (m).
    pub thickness: f64,
    /// Depth of the top face of row 0 (m).
    pub top_depth: f64,
}

impl Grid {
    pub fn new(nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        Self::with_geometry(nx, nz, dx, dz, 1.0, 0.0)
    }

    pub fn with_geometry(
        nx: usize,
        nz: usize,
        dx: f64,
        dz: f64,
        thickness: f64,
        top_depth: f64,
    ) -> Result<Self> {
        if nx < 4 || nz < 1 {
            return Err(Error::Parameter(format!(
                "grid needs nx >= 4 and nz >= 1, got {nx}x{nz}"
            )));
        }
        for (name, v) in [("dx", dx), ("dz", dz), ("thickness", thickness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !top_depth.is_finite() {
            return Err(Error::Parameter("top_depth must be finite".into()));
        }
        Ok(Self {
            nx,
            nz,
            dx,
            dz,
            thickness,
            top_depth,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn cell(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    /// Depth of the centre of row `iz`.
    #[inline]
    pub fn depth(&self, iz: usize) -> f64 {
        self.top_depth + (iz as f64 + 0.5) * self.dz
    }

    pub fn depth_of_cell(&self) -> Field2D {
        Field2D::from_fn(self.nx, self.nz, |_, iz| self.depth(iz))
    }

    pub fn mid_depth(&self) -> f64 {
        self.top_depth + 0.5 * self.nz as f64 * self.dz
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dz * self.thickness
    }

    pub fn contains(&self, ix: usize, iz: usize) -> bool {
        ix < self.nx && iz < self.nz
    }
}
