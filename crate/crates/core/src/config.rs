//! Run configuration: flat `section.key=value` text validated against a fixed schema.
//!
//! Every key is optional and falls back to the default shown by [`default_config_text`].
//! Unknown keys, duplicate keys and unparsable values are configuration errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::design::{BenchmarkDesign, WellConfig};
use crate::error::{Error, Result};
use crate::fno::FnoArch;
use crate::kv::{self, KvMap};
use crate::sim::Schedule;
use crate::train::TrainConfig;

/// Evaluation options.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Cells whose pressure series are compared. Empty means the topmost perforation of
    /// every injector and producer.
    pub monitored_cells: Vec<(usize, usize)>,
    /// Number of test cases re-simulated for the timing comparison (0 = all).
    pub timing_cases: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            monitored_cells: Vec::new(),
            timing_cases: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub design: BenchmarkDesign,
    pub arch: FnoArch,
    pub train: TrainConfig,
    pub split_seed: u64,
    pub out_dir: PathBuf,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            design: BenchmarkDesign::default(),
            arch: FnoArch {
                width: 16,
                modes_x: 8,
                modes_z: 8,
                fc2_width: 64,
                fourier_bias: true,
            },
            train: TrainConfig::default(),
            split_seed: 2024,
            out_dir: PathBuf::from("runs/benchmark"),
            eval: EvalConfig::default(),
        }
    }
}

/// Consumes keys from a parsed map so that leftovers can be reported as unknown.
struct Reader {
    map: KvMap,
}

impl Reader {
    fn value<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(raw) = self.map.remove(key) {
            *slot = raw
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))?;
        }
        Ok(())
    }

    fn with<T>(&mut self, key: &str, slot: &mut T, parse: impl Fn(&str) -> Result<T>) -> Result<()> {
        if let Some(raw) = self.map.remove(key) {
            *slot = parse(&raw).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.map.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
            Err(Error::Config(format!("unknown configuration keys: {}", keys.join(", "))))
        }
    }
}

fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("bad list item {t:?}"))))
        .collect()
}

fn parse_rows(raw: &str) -> Result<(usize, usize)> {
    let (a, b) = raw
        .split_once('-')
        .ok_or_else(|| Error::Config(format!("expected lo-hi, got {raw:?}")))?;
    let p = |s: &str| s.trim().parse().map_err(|_| Error::Config(format!("bad row {s:?}")));
    Ok((p(a)?, p(b)?))
}

/// A number or a simple `a/b` fraction.
fn parse_fraction(raw: &str) -> Result<f64> {
    let bad = || Error::Config(format!("bad fraction {raw:?}"));
    match raw.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => raw.trim().parse().map_err(|_| bad()),
    }
}

/// Well configurations as `index:fraction+index:fraction;...`.
fn parse_well_configs(raw: &str) -> Result<Vec<WellConfig>> {
    raw.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|cfg| {
            let active = cfg
                .split('+')
                .map(|member| {
                    let (i, f) = member
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("expected index:fraction, got {member:?}")))?;
                    let i = i.trim().parse().map_err(|_| Error::Config(format!("bad injector index {i:?}")))?;
                    Ok((i, parse_fraction(f)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WellConfig { active })
        })
        .collect()
}

fn render_well_configs(cfgs: &[WellConfig]) -> String {
    cfgs.iter()
        .map(|c| {
            c.active
                .iter()
                .map(|(i, f)| {
                    if (f * 3.0 - 1.0).abs() < 1e-12 {
                        format!("{i}:1/3")
                    } else {
                        format!("{i}:{f}")
                    }
                })
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_cells(raw: &str) -> Result<Vec<(usize, usize)>> {
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("expected ix:iz, got {t:?}")))?;
            let p = |s: &str| s.trim().parse().map_err(|_| Error::Config(format!("bad cell index {s:?}")));
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut r = Reader { map: kv::parse(text)? };
        let d = &mut cfg.design;

        r.value("grid.nx", &mut d.grid.nx)?;
        r.value("grid.nz", &mut d.grid.nz)?;
        r.value("grid.dx", &mut d.grid.dx)?;
        r.value("grid.dz", &mut d.grid.dz)?;
        r.value("grid.thickness", &mut d.grid.thickness)?;
        r.value("grid.top_depth", &mut d.grid.top_depth)?;

        r.value("rock.log10_mean_md", &mut d.rock.log10_mean_md)?;
        r.value("rock.log10_std", &mut d.rock.log10_std)?;
        r.value("rock.corr_len_x", &mut d.rock.corr_len_x)?;
        r.value("rock.corr_len_z", &mut d.rock.corr_len_z)?;
        r.value("rock.anisotropy", &mut d.rock.anisotropy)?;
        r.value("rock.mean_spread", &mut d.rock.mean_spread)?;
        r.with("rock.seeds", &mut d.rock.seeds, parse_list)?;

        r.value("fluid.rho_w", &mut d.fluids.rho_w)?;
        r.value("fluid.rho_g", &mut d.fluids.rho_g)?;
        r.value("fluid.mu_w", &mut d.fluids.mu_w)?;
        r.value("fluid.mu_g", &mut d.fluids.mu_g)?;
        r.value("fluid.c_w", &mut d.fluids.c_w)?;
        r.value("fluid.c_g", &mut d.fluids.c_g)?;
        r.value("fluid.c_r", &mut d.fluids.c_r)?;
        r.value("fluid.g", &mut d.fluids.g)?;
        r.value("fluid.p_ref", &mut d.fluids.p_ref)?;

        r.value("relperm.swc", &mut d.relperm.swc)?;
        r.value("relperm.sgr", &mut d.relperm.sgr)?;
        r.value("relperm.krw0", &mut d.relperm.krw0)?;
        r.value("relperm.krg0", &mut d.relperm.krg0)?;
        r.value("relperm.nw", &mut d.relperm.nw)?;
        r.value("relperm.ng", &mut d.relperm.ng)?;

        r.with("wells.injector_x", &mut d.wells.injector_x, parse_list)?;
        r.with("wells.injector_rows", &mut d.wells.injector_rows, parse_rows)?;
        r.with("wells.producer_x", &mut d.wells.producer_x, parse_list)?;
        r.with("wells.producer_rows", &mut d.wells.producer_rows, parse_rows)?;
        r.value("wells.producer_drawdown", &mut d.wells.producer_drawdown)?;
        r.value("wells.well_radius", &mut d.wells.well_radius)?;

        r.value("sampling.base_total", &mut d.sampling.base_total)?;
        r.with("sampling.total_scales", &mut d.sampling.total_scales, parse_list)?;
        r.with("sampling.well_configs", &mut d.sampling.well_configs, parse_well_configs)?;
        r.value("sampling.cases", &mut d.sampling.cases)?;

        let (mut t_inj, mut t_total, mut every) = (d.schedule.t_inj, d.schedule.t_total, d.schedule.snapshot_every);
        r.value("schedule.t_inj", &mut t_inj)?;
        r.value("schedule.t_total", &mut t_total)?;
        r.value("schedule.snapshot_every", &mut every)?;
        d.schedule = Schedule::new(t_inj, t_total, every).map_err(|e| Error::Config(e.to_string()))?;

        r.value("sim.p_mid", &mut d.p_mid)?;
        r.value("sim.initial_dt_months", &mut d.controls.initial_dt_months)?;
        r.value("sim.max_dt_months", &mut d.controls.max_dt_months)?;
        r.value("sim.min_dt_months", &mut d.controls.min_dt_months)?;
        r.value("sim.ds_target", &mut d.controls.ds_target)?;
        r.value("sim.rtol", &mut d.controls.rtol)?;

        r.value("fno.width", &mut cfg.arch.width)?;
        r.value("fno.modes_x", &mut cfg.arch.modes_x)?;
        r.value("fno.modes_z", &mut cfg.arch.modes_z)?;
        r.value("fno.fc2_width", &mut cfg.arch.fc2_width)?;
        r.value("fno.fourier_bias", &mut cfg.arch.fourier_bias)?;

        r.value("train.batch_size", &mut cfg.train.batch_size)?;
        r.value("train.max_epochs", &mut cfg.train.max_epochs)?;
        r.value("train.lr", &mut cfg.train.lr)?;
        r.value("train.shuffle_seed", &mut cfg.train.shuffle_seed)?;
        r.value("train.init_seed", &mut cfg.train.init_seed)?;
        r.value("train.eval_every", &mut cfg.train.eval_every)?;

        r.value("data.split_seed", &mut cfg.split_seed)?;
        r.value("paths.out", &mut cfg.out_dir)?;

        r.with("eval.monitored_cells", &mut cfg.eval.monitored_cells, parse_cells)?;
        r.value("eval.timing_cases", &mut cfg.eval.timing_cases)?;

        r.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.design;
        d.validate().map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })?;
        d.fluids.validate().map_err(|e| Error::Config(e.to_string()))?;
        d.relperm.validate().map_err(|e| Error::Config(e.to_string()))?;
        let c = &d.controls;
        if !(c.min_dt_months > 0.0 && c.min_dt_months <= c.initial_dt_months && c.initial_dt_months <= c.max_dt_months)
        {
            return Err(Error::Config("need 0 < sim.min_dt_months <= sim.initial_dt_months <= sim.max_dt_months".into()));
        }
        if !(c.ds_target > 0.0 && c.rtol > 0.0 && c.rtol < 1.0) {
            return Err(Error::Config("sim.ds_target and sim.rtol must be positive (rtol < 1)".into()));
        }
        for n in [d.grid.nx, d.grid.nz] {
            if !n.is_power_of_two() {
                return Err(Error::Config(format!("grid dimensions must be powers of two, got {n}")));
            }
        }
        for &(ix, iz) in &self.eval.monitored_cells {
            if ix >= d.grid.nx || iz >= d.grid.nz {
                return Err(Error::Config(format!("monitored cell {ix}:{iz} lies outside the grid")));
            }
        }
        self.arch.validate()?;
        self.train.validate()
    }

    /// Full configuration as `key=value` text; parsing it reproduces `self`.
    pub fn render(&self) -> String {
        let d = &self.design;
        let mut m = KvMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("grid.nx", d.grid.nx.to_string());
        put("grid.nz", d.grid.nz.to_string());
        put("grid.dx", d.grid.dx.to_string());
        put("grid.dz", d.grid.dz.to_string());
        put("grid.thickness", d.grid.thickness.to_string());
        put("grid.top_depth", d.grid.top_depth.to_string());
        put("rock.log10_mean_md", d.rock.log10_mean_md.to_string());
        put("rock.log10_std", d.rock.log10_std.to_string());
        put("rock.corr_len_x", d.rock.corr_len_x.to_string());
        put("rock.corr_len_z", d.rock.corr_len_z.to_string());
        put("rock.anisotropy", d.rock.anisotropy.to_string());
        put("rock.mean_spread", d.rock.mean_spread.to_string());
        put("rock.seeds", join(&d.rock.seeds));
        put("fluid.rho_w", d.fluids.rho_w.to_string());
        put("fluid.rho_g", d.fluids.rho_g.to_string());
        put("fluid.mu_w", d.fluids.mu_w.to_string());
        put("fluid.mu_g", d.fluids.mu_g.to_string());
        put("fluid.c_w", d.fluids.c_w.to_string());
        put("fluid.c_g", d.fluids.c_g.to_string());
        put("fluid.c_r", d.fluids.c_r.to_string());
        put("fluid.g", d.fluids.g.to_string());
        put("fluid.p_ref", d.fluids.p_ref.to_string());
        put("relperm.swc", d.relperm.swc.to_string());
        put("relperm.sgr", d.relperm.sgr.to_string());
        put("relperm.krw0", d.relperm.krw0.to_string());
        put("relperm.krg0", d.relperm.krg0.to_string());
        put("relperm.nw", d.relperm.nw.to_string());
        put("relperm.ng", d.relperm.ng.to_string());
        put("wells.injector_x", join(&d.wells.injector_x));
        put("wells.injector_rows", format!("{}-{}", d.wells.injector_rows.0, d.wells.injector_rows.1));
        put("wells.producer_x", join(&d.wells.producer_x));
        put("wells.producer_rows", format!("{}-{}", d.wells.producer_rows.0, d.wells.producer_rows.1));
        put("wells.producer_drawdown", d.wells.producer_drawdown.to_string());
        put("wells.well_radius", d.wells.well_radius.to_string());
        put("sampling.base_total", d.sampling.base_total.to_string());
        put("sampling.total_scales", join(&d.sampling.total_scales));
        put("sampling.well_configs", render_well_configs(&d.sampling.well_configs));
        put("sampling.cases", d.sampling.cases.to_string());
        put("schedule.t_inj", d.schedule.t_inj.to_string());
        put("schedule.t_total", d.schedule.t_total.to_string());
        put("schedule.snapshot_every", d.schedule.snapshot_every.to_string());
        put("sim.p_mid", d.p_mid.to_string());
        put("sim.initial_dt_months", d.controls.initial_dt_months.to_string());
        put("sim.max_dt_months", d.controls.max_dt_months.to_string());
        put("sim.min_dt_months", d.controls.min_dt_months.to_string());
        put("sim.ds_target", d.controls.ds_target.to_string());
        put("sim.rtol", d.controls.rtol.to_string());
        put("fno.width", self.arch.width.to_string());
        put("fno.modes_x", self.arch.modes_x.to_string());
        put("fno.modes_z", self.arch.modes_z.to_string());
        put("fno.fc2_width", self.arch.fc2_width.to_string());
        put("fno.fourier_bias", self.arch.fourier_bias.to_string());
        put("train.batch_size", self.train.batch_size.to_string());
        put("train.max_epochs", self.train.max_epochs.to_string());
        put("train.lr", self.train.lr.to_string());
        put("train.shuffle_seed", self.train.shuffle_seed.to_string());
        put("train.init_seed", self.train.init_seed.to_string());
        put("train.eval_every", self.train.eval_every.to_string());
        put("data.split_seed", self.split_seed.to_string());
        put("paths.out", self.out_dir.display().to_string());
        put(
            "eval.monitored_cells",
            self.eval
                .monitored_cells
                .iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        put("eval.timing_cases", self.eval.timing_cases.to_string());
        kv::render(&m)
    }
}

/// Text of the default configuration with every key spelled out.
pub fn default_config_text() -> String {
    RunConfig::default().render()
}
