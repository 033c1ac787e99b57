use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::units::MILLIDARCY;

/// Default vertical-to-horizontal permeability ratio.
pub const DEFAULT_ANISOTROPY: f64 = 0.1;

/// Static rock properties. Permeabilities in m².
#[derive(Debug, Clone, PartialEq)]
pub struct RockFields {
    pub perm_h: Field2D,
    pub perm_v: Field2D,
    pub poro: Field2D,
}

impl RockFields {
    /// Builds rock fields with `K_V = anisotropy · K_H`.
    pub fn new(perm_h: Field2D, poro: Field2D, anisotropy: f64) -> Result<Self> {
        if !perm_h.same_shape(&poro) {
            return Err(Error::Contract("permeability and porosity shapes differ".into()));
        }
        if !(anisotropy.is_finite() && anisotropy > 0.0) {
            return Err(Error::Parameter(format!("anisotropy ratio must be > 0, got {anisotropy}")));
        }
        let perm_v = perm_h.map(|k| k * anisotropy);
        let rock = Self {
            perm_h,
            perm_v,
            poro,
        };
        rock.validate()?;
        Ok(rock)
    }

    pub fn uniform(grid: &Grid, perm_h: f64, poro: f64, anisotropy: f64) -> Result<Self> {
        Self::new(
            Field2D::new(grid.nx, grid.nz, perm_h),
            Field2D::new(grid.nx, grid.nz, poro),
            anisotropy,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let perm_ok = |f: &Field2D| f.data().iter().all(|&k| k.is_finite() && k > 0.0);
        if !perm_ok(&self.perm_h) || !perm_ok(&self.perm_v) {
            return Err(Error::Parameter("permeability must be positive and finite".into()));
        }
        if !self.poro.data().iter().all(|&p| p > 0.0 && p < 1.0) {
            return Err(Error::Parameter("porosity must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.perm_h.nx() == grid.nx && self.perm_h.nz() == grid.nz
    }

    pub fn mirrored_x(&self) -> Self {
        Self {
            perm_h: self.perm_h.mirrored_x(),
            perm_v: self.perm_v.mirrored_x(),
            poro: self.poro.mirrored_x(),
        }
    }
}

/// Log-normal random field `10^G` with `G` Gaussian, stationary, with the requested
/// mean and standard deviation and a separable exponential correlation
/// `exp(-|hx|/corr_len_x) · exp(-|hz|/corr_len_z)`.
///
/// An exponential correlation on a regular lattice is Markov, so the Cholesky factor
/// of each 1D correlation matrix is an AR(1) recursion. Filtering white noise along
/// x and then along z yields the separable covariance exactly.
///
/// The returned values carry whatever unit `log10_mean` is expressed in.
pub fn gaussian_log_perm(
    grid: &Grid,
    corr_len_x: f64,
    corr_len_z: f64,
    log10_mean: f64,
    log10_std: f64,
    seed: u64,
) -> Result<Field2D> {
    for (name, v) in [
        ("corr_len_x", corr_len_x),
        ("corr_len_z", corr_len_z),
        ("log10_mean", log10_mean),
        ("log10_std", log10_std),
    ] {
        if !v.is_finite() {
            return Err(Error::Parameter(format!("{name} must be finite, got {v}")));
        }
    }
    if corr_len_x <= 0.0 || corr_len_z <= 0.0 {
        return Err(Error::Parameter("correlation lengths must be positive".into()));
    }
    if log10_std < 0.0 {
        return Err(Error::Parameter("log10_std must be non-negative".into()));
    }
    let (nx, nz) = (grid.nx, grid.nz);
    if log10_std == 0.0 {
        return Ok(Field2D::new(nx, nz, 10f64.powf(log10_mean)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<f64> = (0..nx * nz).map(|_| StandardNormal.sample(&mut rng)).collect();

    let rho_x = (-grid.dx / corr_len_x).exp();
    let rho_z = (-grid.dz / corr_len_z).exp();
    let sx = (1.0 - rho_x * rho_x).sqrt();
    let sz = (1.0 - rho_z * rho_z).sqrt();
    for iz in 0..nz {
        let row = &mut g[iz * nx..(iz + 1) * nx];
        for ix in 1..nx {
            row[ix] = rho_x * row[ix - 1] + sx * row[ix];
        }
    }
    for iz in 1..nz {
        for ix in 0..nx {
            let above = g[(iz - 1) * nx + ix];
            let here = &mut g[iz * nx + ix];
            *here = rho_z * above + sz * *here;
        }
    }
    let data = g
        .into_iter()
        .map(|v| 10f64.powf(log10_mean + log10_std * v))
        .collect();
    Field2D::from_vec(nx, nz, data)
}

/// Porosity correlated with permeability: `φ = 0.05 + 0.05·log10(K / 1 mD)`,
/// clamped to `[0.05, 0.35]`. `perm` is in m².
pub fn porosity_from_perm(perm: &Field2D) -> Field2D {
    perm.map(|k| (0.05 + 0.05 * (k / MILLIDARCY).log10()).clamp(0.05, 0.35))
}
