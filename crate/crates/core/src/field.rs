use crate::error::{Error, Result};

/// Scalar field on a structured `nx × nz` cross-section.
///
/// Storage is row-major with x fastest: cell `(ix, iz)` lives at `iz * nx + ix`.
/// Row `iz = 0` is the top of the section.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    nx: usize,
    nz: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn new(nx: usize, nz: usize, value: f64) -> Self {
        Self {
            nx,
            nz,
            data: vec![value; nx * nz],
        }
    }

    pub fn from_vec(nx: usize, nz: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * nz {
            return Err(Error::Contract(format!(
                "field of {nx}x{nz} needs {} values, got {}",
                nx * nz,
                data.len()
            )));
        }
        Ok(Self { nx, nz, data })
    }

    pub fn from_fn(nx: usize, nz: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * nz);
        for iz in 0..nz {
            for ix in 0..nx {
                data.push(f(ix, iz));
            }
        }
        Self { nx, nz, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iz: usize) -> f64 {
        self.data[iz * self.nx + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iz: usize, v: f64) {
        let i = self.idx(ix, iz);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nx: self.nx,
            nz: self.nz,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Field2D) -> bool {
        self.nx == other.nx && self.nz == other.nz
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mirror image about the vertical midline.
    pub fn mirrored_x(&self) -> Self {
        Self::from_fn(self.nx, self.nz, |ix, iz| self.get(self.nx - 1 - ix, iz))
    }
}
