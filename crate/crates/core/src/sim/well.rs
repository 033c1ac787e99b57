use super::grid::Grid;
use super::rock::RockFields;
use crate::error::{Error, Result};
use crate::units::SECONDS_PER_MONTH;

/// Injection/post-injection timeline in whole months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub t_inj: u32,
    pub t_total: u32,
    pub snapshot_every: u32,
}

impl Schedule {
    pub fn new(t_inj: u32, t_total: u32, snapshot_every: u32) -> Result<Self> {
        if t_inj == 0 || t_inj >= t_total {
            return Err(Error::Parameter(format!(
                "need 0 < t_inj < t_total, got {t_inj} and {t_total}"
            )));
        }
        if snapshot_every == 0 || t_total % snapshot_every != 0 {
            return Err(Error::Parameter(format!(
                "snapshot_every={snapshot_every} must divide t_total={t_total}"
            )));
        }
        Ok(Self {
            t_inj,
            t_total,
            snapshot_every,
        })
    }

    pub fn n_snapshots(&self) -> usize {
        (self.t_total / self.snapshot_every) as usize
    }

    /// Snapshot times in months, excluding the initial state.
    pub fn snapshot_months(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n_snapshots() as u32).map(move |k| k * self.snapshot_every)
    }

    /// Wells are open through the end of month `t_inj`.
    pub fn is_injection_month(&self, month: u32) -> bool {
        month <= self.t_inj
    }
}

/// One constant-rate period ending at `end_month`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePeriod {
    pub end_month: u32,
    /// Volumetric CO₂ rate at the reference pressure (m³/s).
    pub rate: f64,
}

/// Piecewise-constant rate schedule. Period `k` covers `(end_{k-1}, end_k]`,
/// the first period starts at month 0, and the rate is zero after the last period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateSchedule {
    periods: Vec<RatePeriod>,
}

impl RateSchedule {
    pub fn new(periods: Vec<RatePeriod>) -> Result<Self> {
        let mut prev = 0;
        for p in &periods {
            if p.end_month <= prev {
                return Err(Error::Parameter("rate periods must have increasing end months".into()));
            }
            if !(p.rate.is_finite() && p.rate >= 0.0) {
                return Err(Error::Parameter(format!("injection rate must be >= 0, got {}", p.rate)));
            }
            prev = p.end_month;
        }
        Ok(Self { periods })
    }

    pub fn constant(rate: f64, until_month: u32) -> Result<Self> {
        Self::new(vec![RatePeriod {
            end_month: until_month,
            rate,
        }])
    }

    pub fn periods(&self) -> &[RatePeriod] {
        &self.periods
    }

    pub fn last_month(&self) -> u32 {
        self.periods.last().map_or(0, |p| p.end_month)
    }

    /// Rate in effect at continuous time `t` (months); right-continuous at period ends.
    pub fn rate_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.periods.first().map_or(0.0, |p| p.rate);
        }
        self.periods
            .iter()
            .find(|p| t <= p.end_month as f64)
            .map_or(0.0, |p| p.rate)
    }

    /// Rate in effect during month `m`, i.e. on `(m-1, m]`.
    pub fn rate_in_month(&self, month: u32) -> f64 {
        if month == 0 {
            return 0.0;
        }
        self.periods
            .iter()
            .find(|p| month <= p.end_month)
            .map_or(0.0, |p| p.rate)
    }

    /// Volume injected over `[0, t]` months (m³ at reference pressure).
    pub fn integral(&self, t: f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        for p in &self.periods {
            let end = p.end_month as f64;
            if t <= start {
                break;
            }
            total += p.rate * (t.min(end) - start) * SECONDS_PER_MONTH;
            start = end;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WellControl {
    /// Rate-controlled CO₂ injector.
    Injector { schedule: RateSchedule },
    /// Fixed bottom-hole-pressure producer. `bhp` is quoted at `datum_depth`; each
    /// perforation sees it shifted by the water head inside the wellbore.
    Producer {
        bhp: f64,
        datum_depth: f64,
        /// Peaceman well index per perforated cell (m³).
        well_index: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellSpec {
    pub name: String,
    /// Perforated cells as `(ix, iz)`.
    pub cells: Vec<(usize, usize)>,
    pub control: WellControl,
}

impl WellSpec {
    pub fn injector(name: impl Into<String>, cells: Vec<(usize, usize)>, schedule: RateSchedule) -> Self {
        Self {
            name: name.into(),
            cells,
            control: WellControl::Injector { schedule },
        }
    }

    /// Producer with Peaceman well indices computed from the rock.
    pub fn producer(
        name: impl Into<String>,
        cells: Vec<(usize, usize)>,
        bhp: f64,
        datum_depth: f64,
        grid: &Grid,
        rock: &RockFields,
        well_radius: f64,
    ) -> Self {
        let well_index = cells
            .iter()
            .map(|&(ix, iz)| peaceman_well_index(grid, rock.perm_h.get(ix, iz), well_radius))
            .collect();
        Self {
            name: name.into(),
            cells,
            control: WellControl::Producer {
                bhp,
                datum_depth,
                well_index,
            },
        }
    }

    pub fn is_injector(&self) -> bool {
        matches!(self.control, WellControl::Injector { .. })
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Parameter(format!("well {} has no perforations", self.name)));
        }
        if let Some(&(ix, iz)) = self.cells.iter().find(|&&(ix, iz)| !grid.contains(ix, iz)) {
            return Err(Error::Parameter(format!(
                "well {} perforation ({ix}, {iz}) lies outside the grid",
                self.name
            )));
        }
        match &self.control {
            // Periods extending past t_inj are legal; the simulator shuts the well at t_inj.
            WellControl::Injector { .. } => {}
            WellControl::Producer { bhp, well_index, .. } => {
                if !(bhp.is_finite() && *bhp > 0.0) {
                    return Err(Error::Parameter(format!("well {} needs bhp > 0", self.name)));
                }
                if well_index.len() != self.cells.len() || well_index.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::Parameter(format!("well {} has invalid well indices", self.name)));
                }
            }
        }
        Ok(())
    }

    pub fn mirrored_x(&self, grid: &Grid) -> Self {
        Self {
            name: self.name.clone(),
            cells: self.cells.iter().map(|&(ix, iz)| (grid.nx - 1 - ix, iz)).collect(),
            control: self.control.clone(),
        }
    }
}

/// Peaceman well index for a vertical well through a cell of the cross-section.
/// The well axis is along z; the cell footprint is `dx × thickness`.
pub fn peaceman_well_index(grid: &Grid, perm_h: f64, well_radius: f64) -> f64 {
    let r_eq = 0.14 * (grid.dx * grid.dx + grid.thickness * grid.thickness).sqrt();
    2.0 * std::f64::consts::PI * perm_h * grid.dz / (r_eq / well_radius).ln().max(1e-3)
}

/// Splits an injector's rate among its perforations in proportion to `K_H`.
pub fn perforation_shares(cells: &[(usize, usize)], rock: &RockFields) -> Vec<f64> {
    let ks: Vec<f64> = cells.iter().map(|&(ix, iz)| rock.perm_h.get(ix, iz)).collect();
    let total: f64 = ks.iter().sum();
    ks.into_iter().map(|k| k / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_invariants() {
        assert!(Schedule::new(360, 960, 1).is_ok());
        assert!(Schedule::new(960, 960, 1).is_err());
        assert!(Schedule::new(0, 960, 1).is_err());
        assert!(Schedule::new(10, 25, 2).is_err());
        assert_eq!(Schedule::new(360, 960, 1).unwrap().n_snapshots(), 960);
    }

    #[test]
    fn rate_lookup_and_integral() {
        let s = RateSchedule::new(vec![
            RatePeriod { end_month: 12, rate: 2.0 },
            RatePeriod { end_month: 24, rate: 1.0 },
        ])
        .unwrap();
        assert_eq!(s.rate_in_month(1), 2.0);
        assert_eq!(s.rate_in_month(12), 2.0);
        assert_eq!(s.rate_in_month(13), 1.0);
        assert_eq!(s.rate_in_month(25), 0.0);
        assert_eq!(s.rate_at(12.0), 2.0);
        assert_eq!(s.rate_at(12.5), 1.0);
        let expect = (12.0 * 2.0 + 6.0 * 1.0) * SECONDS_PER_MONTH;
        assert!((s.integral(18.0) - expect).abs() < 1e-9 * expect);
        assert_eq!(s.integral(100.0), s.integral(24.0));
    }

    #[test]
    fn rejects_negative_rates() {
        assert!(RateSchedule::constant(-1.0, 12).is_err());
    }
}
