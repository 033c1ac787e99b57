//! Sampling grid for the benchmark: rock realizations × injection totals ×
//! well configurations, and the construction of each [`SimCase`].

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::kv::KvMap;
use crate::sim::{
    gaussian_log_perm, porosity_from_perm, FlowSystem, FluidProps, Grid, RateSchedule,
    RelPermModel, RockFields, Schedule, SimCase, StepControls, WellSpec,
};
use crate::units::{MILLIDARCY, SECONDS_PER_MONTH};

/// Standard-normal quantiles used to shift the three realizations' mean log-permeability
/// (low, median, high).
pub const REALIZATION_QUANTILES: [f64; 3] = [-1.281_551_565_545, 0.0, 1.281_551_565_545];

#[derive(Debug, Clone, PartialEq)]
pub struct GridDesign {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    pub thickness: f64,
    pub top_depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RockDesign {
    /// Mean of log10 permeability in millidarcy.
    pub log10_mean_md: f64,
    pub log10_std: f64,
    pub corr_len_x: f64,
    pub corr_len_z: f64,
    pub anisotropy: f64,
    /// One seed per realization.
    pub seeds: Vec<u64>,
    /// Spread of the realization means in log10 units, applied through the quantiles.
    pub mean_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellDesign {
    pub injector_x: Vec<usize>,
    /// Inclusive perforated row range of every injector.
    pub injector_rows: (usize, usize),
    pub producer_x: Vec<usize>,
    pub producer_rows: (usize, usize),
    /// Producer bottom-hole pressure relative to the initial hydrostatic pressure (Pa).
    pub producer_drawdown: f64,
    pub well_radius: f64,
}

/// One well configuration: which injectors are active and their share of the total.
#[derive(Debug, Clone, PartialEq)]
pub struct WellConfig {
    pub active: Vec<(usize, f64)>,
}

impl WellConfig {
    pub fn label(&self) -> String {
        self.active
            .iter()
            .map(|(i, f)| format!("{i}:{:.0}", f * 100.0))
            .collect::<Vec<_>>()
            .join("/")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDesign {
    /// Total CO₂ volume (reference m³) injected at scale 1.
    pub base_total: f64,
    pub total_scales: Vec<f64>,
    pub well_configs: Vec<WellConfig>,
    /// Number of cases; the factor grid is cycled with fresh realization seeds if larger.
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDesign {
    pub grid: GridDesign,
    pub rock: RockDesign,
    pub fluids: FluidProps,
    pub relperm: RelPermModel,
    pub wells: WellDesign,
    pub sampling: SamplingDesign,
    pub schedule: Schedule,
    pub p_mid: f64,
    pub controls: StepControls,
}

/// Coordinates of one case in the factor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub case_id: u32,
    pub realization: usize,
    /// Replication round; non-zero only when the budget exceeds the factor grid.
    pub replicate: usize,
    pub total_scale: f64,
    pub wells: WellConfig,
}

impl Default for BenchmarkDesign {
    fn default() -> Self {
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let splits = [(0.5, 0.5), (0.1, 0.9), (0.9, 0.1)];
        let mut well_configs = Vec::new();
        for &(a, b) in &pairs {
            for &(fa, fb) in &splits {
                well_configs.push(WellConfig {
                    active: vec![(a, fa), (b, fb)],
                });
            }
        }
        well_configs.push(WellConfig {
            active: vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)],
        });
        Self {
            grid: GridDesign {
                nx: 64,
                nz: 32,
                dx: 50.0,
                dz: 4.0,
                thickness: 100.0,
                top_depth: 1900.0,
            },
            rock: RockDesign {
                log10_mean_md: 2.0,
                log10_std: 0.4,
                corr_len_x: 600.0,
                corr_len_z: 12.0,
                anisotropy: 0.1,
                seeds: vec![1101, 2202, 3303],
                mean_spread: 0.2,
            },
            fluids: FluidProps::default(),
            relperm: RelPermModel::default(),
            wells: WellDesign {
                injector_x: vec![10, 32, 53],
                injector_rows: (20, 31),
                producer_x: vec![21, 42],
                producer_rows: (16, 31),
                producer_drawdown: 0.0,
                well_radius: 0.1,
            },
            sampling: SamplingDesign {
                base_total: 1.0e6,
                total_scales: vec![1.0, 0.5, 0.25],
                well_configs,
                cases: 90,
            },
            schedule: Schedule::new(360, 960, 1).expect("valid default schedule"),
            p_mid: 2.0e7,
            controls: StepControls::default(),
        }
    }
}

impl BenchmarkDesign {
    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::with_geometry(g.nx, g.nz, g.dx, g.dz, g.thickness, g.top_depth)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let w = &self.wells;
        if w.injector_x.is_empty() {
            return Err(Error::Config("at least one injector location is required".into()));
        }
        for &x in w.injector_x.iter().chain(&w.producer_x) {
            if x >= grid.nx {
                return Err(Error::Config(format!("well column {x} outside grid of width {}", grid.nx)));
            }
        }
        for (lo, hi) in [w.injector_rows, w.producer_rows] {
            if lo > hi || hi >= grid.nz {
                return Err(Error::Config(format!("perforation rows {lo}-{hi} invalid for nz={}", grid.nz)));
            }
        }
        if self.rock.seeds.is_empty() || self.rock.seeds.len() > REALIZATION_QUANTILES.len() {
            return Err(Error::Config("rock.seeds must list 1 to 3 realization seeds".into()));
        }
        let s = &self.sampling;
        if s.total_scales.is_empty() || s.well_configs.is_empty() || s.cases == 0 {
            return Err(Error::Config("sampling grid is empty".into()));
        }
        if s.total_scales.iter().any(|v| !(*v > 0.0)) || !(s.base_total > 0.0) {
            return Err(Error::Config("injection totals must be positive".into()));
        }
        for wc in &s.well_configs {
            if wc.active.iter().any(|&(i, _)| i >= w.injector_x.len()) {
                return Err(Error::Config(format!("well config {} names an unknown injector", wc.label())));
            }
            let sum: f64 = wc.active.iter().map(|a| a.1).sum();
            if (sum - 1.0).abs() > 1e-6 || wc.active.iter().any(|a| a.1 < 0.0) {
                return Err(Error::Config(format!("well config {} fractions must sum to 1", wc.label())));
            }
        }
        Ok(())
    }

    pub fn factor_grid_size(&self) -> usize {
        self.rock.seeds.len() * self.sampling.total_scales.len() * self.sampling.well_configs.len()
    }

    /// Enumerates the case budget over realizations × totals × well configurations.
    pub fn case_specs(&self) -> Vec<CaseSpec> {
        let nr = self.rock.seeds.len();
        let nt = self.sampling.total_scales.len();
        let nw = self.sampling.well_configs.len();
        let grid_size = nr * nt * nw;
        (0..self.sampling.cases)
            .map(|k| {
                let replicate = k / grid_size;
                let j = k % grid_size;
                CaseSpec {
                    case_id: k as u32 + 1,
                    realization: j / (nt * nw),
                    replicate,
                    total_scale: self.sampling.total_scales[(j / nw) % nt],
                    wells: self.sampling.well_configs[j % nw].clone(),
                }
            })
            .collect()
    }

    pub fn realization_seed(&self, spec: &CaseSpec) -> u64 {
        self.rock.seeds[spec.realization].wrapping_add(1_000_003 * spec.replicate as u64)
    }

    /// Horizontal permeability (m²) and porosity of one realization.
    pub fn rock_fields(&self, spec: &CaseSpec) -> Result<RockFields> {
        let grid = self.grid()?;
        let r = &self.rock;
        let mean = r.log10_mean_md + r.mean_spread * REALIZATION_QUANTILES[spec.realization];
        let k_md = gaussian_log_perm(&grid, r.corr_len_x, r.corr_len_z, mean, r.log10_std, self.realization_seed(spec))?;
        let k = k_md.map(|v| v * MILLIDARCY);
        let phi = porosity_from_perm(&k);
        RockFields::new(k, phi, r.anisotropy)
    }

    /// Per-injector constant rates (reference m³/s) for a case.
    pub fn injector_rates(&self, spec: &CaseSpec) -> Vec<f64> {
        let total = self.sampling.base_total * spec.total_scale;
        let seconds = self.schedule.t_inj as f64 * SECONDS_PER_MONTH;
        let mut rates = vec![0.0; self.wells.injector_x.len()];
        for &(i, f) in &spec.wells.active {
            rates[i] = total * f / seconds;
        }
        rates
    }

    pub fn injector_cells(&self, index: usize) -> Vec<(usize, usize)> {
        let (lo, hi) = self.wells.injector_rows;
        (lo..=hi).map(|iz| (self.wells.injector_x[index], iz)).collect()
    }

    pub fn producer_cells(&self, index: usize) -> Vec<(usize, usize)> {
        let (lo, hi) = self.wells.producer_rows;
        (lo..=hi).map(|iz| (self.wells.producer_x[index], iz)).collect()
    }

    /// Binary image of producer perforations.
    pub fn producer_mask(&self) -> Field2D {
        let mut f = Field2D::new(self.grid.nx, self.grid.nz, 0.0);
        for i in 0..self.wells.producer_x.len() {
            for (ix, iz) in self.producer_cells(i) {
                f.set(ix, iz, 1.0);
            }
        }
        f
    }

    pub fn build_case(&self, spec: &CaseSpec) -> Result<SimCase> {
        let grid = self.grid()?;
        let rock = self.rock_fields(spec)?;
        let rates = self.injector_rates(spec);
        let mut wells = Vec::new();
        for (i, &q) in rates.iter().enumerate() {
            if q > 0.0 {
                let sched = RateSchedule::constant(q, self.schedule.t_inj)?;
                wells.push(WellSpec::injector(format!("I{}", i + 1), self.injector_cells(i), sched));
            }
        }
        let hydro_mid = self.p_mid;
        for i in 0..self.wells.producer_x.len() {
            wells.push(WellSpec::producer(
                format!("P{}", i + 1),
                self.producer_cells(i),
                hydro_mid - self.wells.producer_drawdown,
                grid.mid_depth(),
                &grid,
                &rock,
                self.wells.well_radius,
            ));
        }
        let system = FlowSystem::new(grid, rock, self.fluids.clone(), self.relperm.clone(), wells, Vec::new())?;
        Ok(SimCase {
            case_id: spec.case_id,
            seed: self.realization_seed(spec),
            system,
            schedule: self.schedule,
            p_mid: self.p_mid,
            controls: self.controls,
        })
    }

    /// Sidecar metadata describing a case.
    pub fn case_metadata(&self, spec: &CaseSpec) -> KvMap {
        let mut m = KvMap::new();
        m.insert("case_id".into(), spec.case_id.to_string());
        m.insert("seed".into(), self.realization_seed(spec).to_string());
        m.insert("realization".into(), spec.realization.to_string());
        m.insert("replicate".into(), spec.replicate.to_string());
        m.insert("total_scale".into(), spec.total_scale.to_string());
        m.insert("total_injection_m3".into(), format!("{:e}", self.sampling.base_total * spec.total_scale));
        m.insert("wells".into(), spec.wells.label());
        m.insert("t_inj_months".into(), self.schedule.t_inj.to_string());
        m.insert("t_total_months".into(), self.schedule.t_total.to_string());
        m.insert("nx".into(), self.grid.nx.to_string());
        m.insert("nz".into(), self.grid.nz.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_gives_ninety_distinct_cases() {
        let d = BenchmarkDesign::default();
        d.validate().unwrap();
        assert_eq!(d.factor_grid_size(), 90);
        let specs = d.case_specs();
        assert_eq!(specs.len(), 90);
        assert!(specs.iter().all(|s| s.replicate == 0));
        let mut keys: Vec<String> = specs
            .iter()
            .map(|s| format!("{}|{}|{}", s.realization, s.total_scale, s.wells.label()))
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 90);
    }

    #[test]
    fn budget_beyond_grid_replicates_with_new_seeds() {
        let mut d = BenchmarkDesign::default();
        d.sampling.well_configs.truncate(4);
        assert_eq!(d.factor_grid_size(), 36);
        let specs = d.case_specs();
        assert_eq!(specs.len(), 90);
        assert_eq!(specs[36].replicate, 1);
        assert_ne!(d.realization_seed(&specs[0]), d.realization_seed(&specs[36]));
        assert_eq!(specs[0].wells, specs[36].wells);
    }

    #[test]
    fn rates_integrate_to_total() {
        let d = BenchmarkDesign::default();
        let spec = &d.case_specs()[5];
        let total: f64 = d.injector_rates(spec).iter().sum::<f64>() * d.schedule.t_inj as f64 * SECONDS_PER_MONTH;
        let expect = d.sampling.base_total * spec.total_scale;
        assert!((total - expect).abs() < 1e-9 * expect);
    }
}
