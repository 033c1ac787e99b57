use super::fluid::{corey_relperm, FluidProps, RelPermModel};
use super::grid::Grid;
use super::rock::RockFields;
use super::well::{perforation_shares, WellControl, WellSpec};
use crate::error::{Error, Result};

/// Whether wells are flowing during a step, and at what time (months).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WellStatus {
    Open { month: f64 },
    Shut,
}

#[derive(Debug, Clone)]
pub(crate) struct Perforation {
    pub cell: usize,
    /// Injector: fraction of the well rate. Producer: well index (m³).
    pub factor: f64,
    /// Producer bottom-hole pressure at this perforation.
    pub bhp: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct WellModel {
    pub spec: WellSpec,
    pub perfs: Vec<Perforation>,
}

/// Everything the IMPES kernels need about one reservoir, with geometric
/// coefficients precomputed.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    pub grid: Grid,
    pub rock: RockFields,
    pub fluids: FluidProps,
    pub relperm: RelPermModel,
    /// Cells held at a fixed pressure, as `(cell, pressure)`.
    pub fixed_pressure: Vec<(usize, f64)>,
    pub(crate) wells: Vec<WellModel>,
    /// Transmissibility between cell `c` and `c + 1` (zero on the right boundary).
    pub(crate) trans_x: Vec<f64>,
    /// Transmissibility between cell `c` and `c + nx` (zero on the bottom row).
    pub(crate) trans_z: Vec<f64>,
    /// Pore volume at the reference pressure.
    pub(crate) pore_volume: Vec<f64>,
    pub(crate) is_fixed: Vec<bool>,
    pub(crate) depth: Vec<f64>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl FlowSystem {
    pub fn new(
        grid: Grid,
        rock: RockFields,
        fluids: FluidProps,
        relperm: RelPermModel,
        wells: Vec<WellSpec>,
        fixed_pressure: Vec<(usize, f64)>,
    ) -> Result<Self> {
        fluids.validate()?;
        relperm.validate()?;
        rock.validate()?;
        if !rock.matches(&grid) {
            return Err(Error::Contract("rock fields do not match the grid".into()));
        }
        let n = grid.n_cells();
        let mut is_fixed = vec![false; n];
        for &(c, p) in &fixed_pressure {
            if c >= n || !(p.is_finite() && p > 0.0) {
                return Err(Error::Parameter(format!("invalid fixed-pressure cell {c} at {p} Pa")));
            }
            is_fixed[c] = true;
        }

        let (nx, nz) = (grid.nx, grid.nz);
        let mut trans_x = vec![0.0; n];
        let mut trans_z = vec![0.0; n];
        let area_x = grid.dz * grid.thickness / grid.dx;
        let area_z = grid.dx * grid.thickness / grid.dz;
        for iz in 0..nz {
            for ix in 0..nx {
                let c = grid.cell(ix, iz);
                if ix + 1 < nx {
                    trans_x[c] = area_x * harmonic(rock.perm_h.get(ix, iz), rock.perm_h.get(ix + 1, iz));
                }
                if iz + 1 < nz {
                    trans_z[c] = area_z * harmonic(rock.perm_v.get(ix, iz), rock.perm_v.get(ix, iz + 1));
                }
            }
        }
        let vol = grid.cell_volume();
        let pore_volume = rock.poro.data().iter().map(|&phi| phi * vol).collect();
        let depth = (0..n).map(|c| grid.depth(c / nx)).collect();

        let mut models = Vec::with_capacity(wells.len());
        for w in wells {
            w.validate(&grid)?;
            let perfs = match &w.control {
                WellControl::Injector { .. } => perforation_shares(&w.cells, &rock)
                    .into_iter()
                    .zip(&w.cells)
                    .map(|(share, &(ix, iz))| Perforation {
                        cell: grid.cell(ix, iz),
                        factor: share,
                        bhp: 0.0,
                    })
                    .collect(),
                WellControl::Producer {
                    bhp,
                    datum_depth,
                    well_index,
                } => w
                    .cells
                    .iter()
                    .zip(well_index)
                    .map(|(&(ix, iz), &wi)| Perforation {
                        cell: grid.cell(ix, iz),
                        factor: wi,
                        bhp: bhp + fluids.rho_w * fluids.g * (grid.depth(iz) - datum_depth),
                    })
                    .collect(),
            };
            models.push(WellModel { spec: w, perfs });
        }

        Ok(Self {
            grid,
            rock,
            fluids,
            relperm,
            fixed_pressure,
            wells: models,
            trans_x,
            trans_z,
            pore_volume,
            is_fixed,
            depth,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn wells(&self) -> impl Iterator<Item = &WellSpec> {
        self.wells.iter().map(|w| &w.spec)
    }

    pub fn has_producers(&self) -> bool {
        self.wells.iter().any(|w| !w.spec.is_injector())
    }

    /// Phase mobilities `(λ_w, λ_g)` at CO₂ saturation `sg`.
    #[inline]
    pub fn mobilities(&self, sg: f64) -> (f64, f64) {
        let (krw, krg) = corey_relperm(sg, &self.relperm);
        (krw / self.fluids.mu_w, krg / self.fluids.mu_g)
    }

    /// Pore volume of cell `c` at pressure `p`.
    #[inline]
    pub fn pore_volume_at(&self, c: usize, p: f64) -> f64 {
        self.pore_volume[c] * self.fluids.pore_factor(p)
    }

    /// Injection rate per cell (reference m³/s) for the given well status.
    pub(crate) fn injection_sources(&self, status: WellStatus) -> Vec<(usize, f64)> {
        let WellStatus::Open { month } = status else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for w in &self.wells {
            if let WellControl::Injector { schedule } = &w.spec.control {
                let q = schedule.rate_at(month);
                if q > 0.0 {
                    out.extend(w.perfs.iter().map(|p| (p.cell, q * p.factor)));
                }
            }
        }
        out
    }

    /// Producer perforations `(cell, well index, bhp)` when wells are open.
    pub(crate) fn producer_perfs(&self, status: WellStatus) -> Vec<(usize, f64, f64)> {
        if status == WellStatus::Shut {
            return Vec::new();
        }
        self.wells
            .iter()
            .filter(|w| !w.spec.is_injector())
            .flat_map(|w| w.perfs.iter().map(|p| (p.cell, p.factor, p.bhp)))
            .collect()
    }

    /// Visits every interior face as `(upper-left cell, neighbour cell, transmissibility, ΔZ)`
    /// with `ΔZ = Z_c − Z_neighbour`.
    #[inline]
    pub(crate) fn for_each_face(&self, mut f: impl FnMut(usize, usize, f64, f64)) {
        let nx = self.grid.nx;
        let n = self.n_cells();
        let dz = self.grid.dz;
        for c in 0..n {
            let tx = self.trans_x[c];
            if tx > 0.0 {
                f(c, c + 1, tx, 0.0);
            }
            let tz = self.trans_z[c];
            if tz > 0.0 {
                f(c, c + nx, tz, -dz);
            }
        }
    }

    /// Hydrostatic water pressure with `p_mid` at mid-depth.
    pub fn hydrostatic_pressure(&self, p_mid: f64) -> Vec<f64> {
        let zm = self.grid.mid_depth();
        let rg = self.fluids.rho_w * self.fluids.g;
        self.depth.iter().map(|&z| p_mid + rg * (z - zm)).collect()
    }
}
