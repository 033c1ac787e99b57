use std::time::Instant;

use super::pressure::pressure_solve;
use super::state::SimState;
use super::system::{FlowSystem, WellStatus};
use super::transport::saturation_update;
use super::well::Schedule;
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::units::SECONDS_PER_MONTH;

/// Time-step control for the IMPES march.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub initial_dt_months: f64,
    pub max_dt_months: f64,
    pub min_dt_months: f64,
    /// Target for the largest saturation change over one pressure step.
    pub ds_target: f64,
    /// Relative residual tolerance of the pressure solver.
    pub rtol: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            initial_dt_months: 1.0 / 30.0,
            max_dt_months: 1.0,
            min_dt_months: 1e-4,
            ds_target: 0.1,
            rtol: 1e-10,
        }
    }
}

/// One fully specified reservoir scenario.
#[derive(Debug, Clone)]
pub struct SimCase {
    pub case_id: u32,
    pub seed: u64,
    pub system: FlowSystem,
    pub schedule: Schedule,
    /// Initial hydrostatic pressure at mid-depth (Pa).
    pub p_mid: f64,
    pub controls: StepControls,
}

impl SimCase {
    pub fn initial_state(&self) -> SimState {
        let mut p = self.system.hydrostatic_pressure(self.p_mid);
        for &(c, v) in &self.system.fixed_pressure {
            p[c] = v;
        }
        let (nx, nz) = (self.system.grid.nx, self.system.grid.nz);
        SimState::new(
            Field2D::from_vec(nx, nz, p).expect("grid-sized vector"),
            Field2D::new(nx, nz, 0.0),
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_mid.is_finite() && self.p_mid > 0.0) {
            return Err(Error::Parameter("initial pressure must be positive".into()));
        }
        let c = &self.controls;
        if !(c.min_dt_months > 0.0 && c.initial_dt_months > 0.0 && c.max_dt_months >= c.min_dt_months) {
            return Err(Error::Parameter("invalid time-step controls".into()));
        }
        if !(c.ds_target > 0.0 && c.rtol > 0.0) {
            return Err(Error::Parameter("ds_target and rtol must be positive".into()));
        }
        let init = self.initial_state();
        if init.p.data().iter().any(|&p| p <= 0.0) {
            return Err(Error::Parameter("initial hydrostatic pressure is not positive everywhere".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub case_id: u32,
    /// States at the schedule cadence, excluding the initial state.
    pub snapshots: Vec<SimState>,
    /// Cumulative CO₂ injected at each snapshot (reference m³).
    pub injected_volume_series: Vec<f64>,
    /// Cumulative CO₂ produced at each snapshot (reference m³).
    pub produced_volume_series: Vec<f64>,
    /// CO₂ in place at each snapshot (reference m³).
    pub in_place_series: Vec<f64>,
    pub clamp_discrepancy: f64,
    pub pressure_steps: usize,
    pub wall_time: f64,
}

impl SimResult {
    /// Relative CO₂ mass-balance error at every snapshot.
    pub fn mass_balance_errors(&self) -> Vec<f64> {
        self.in_place_series
            .iter()
            .zip(&self.injected_volume_series)
            .zip(&self.produced_volume_series)
            .map(|((&m, &inj), &prod)| (m - (inj - prod)).abs() / inj.max(1e-9))
            .collect()
    }

    pub fn max_mass_balance_error(&self) -> f64 {
        self.mass_balance_errors().into_iter().fold(0.0, f64::max)
    }

    /// Bitwise equality of every output except wall time.
    pub fn bitwise_eq(&self, other: &SimResult) -> bool {
        let series = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        self.case_id == other.case_id
            && self.snapshots.len() == other.snapshots.len()
            && self.snapshots.iter().zip(&other.snapshots).all(|(a, b)| a.bitwise_eq(b))
            && series(&self.injected_volume_series, &other.injected_volume_series)
            && series(&self.produced_volume_series, &other.produced_volume_series)
            && series(&self.in_place_series, &other.in_place_series)
    }
}

/// CO₂ in place (reference m³).
pub fn co2_in_place(sys: &FlowSystem, state: &SimState) -> f64 {
    let p = state.p.data();
    state
        .sg
        .data()
        .iter()
        .enumerate()
        .filter(|(c, _)| !sys.is_fixed[*c])
        .map(|(c, &s)| sys.pore_volume_at(c, p[c]) * sys.fluids.b_gas(p[c]) * s)
        .sum()
}

/// Marches IMPES from hydrostatic equilibrium with no CO₂, writing a snapshot
/// every `snapshot_every` months. Wells flow through month `t_inj` and are shut after.
pub fn simulate(case: &SimCase) -> Result<SimResult> {
    case.validate()?;
    let start = Instant::now();
    let sys = &case.system;
    let sched = &case.schedule;
    let ctl = &case.controls;

    let mut state = case.initial_state();
    let mut out = SimResult {
        case_id: case.case_id,
        snapshots: Vec::with_capacity(sched.n_snapshots()),
        injected_volume_series: Vec::with_capacity(sched.n_snapshots()),
        produced_volume_series: Vec::with_capacity(sched.n_snapshots()),
        in_place_series: Vec::with_capacity(sched.n_snapshots()),
        clamp_discrepancy: 0.0,
        pressure_steps: 0,
        wall_time: 0.0,
    };
    let mut injected = 0.0;
    let mut produced = 0.0;
    let mut dt_next = ctl.initial_dt_months.min(ctl.max_dt_months);

    for month in 1..=sched.t_total {
        let end = month as f64;
        let open = sched.is_injection_month(month);
        while state.t < end {
            let requested = dt_next;
            let mut dt = requested.min(end - state.t);
            if end - (state.t + dt) < 1e-9 {
                dt = end - state.t;
            }
            let status = if open {
                WellStatus::Open {
                    month: state.t + 0.5 * dt,
                }
            } else {
                WellStatus::Shut
            };
            let dt_s = dt * SECONDS_PER_MONTH;
            let step = |e: Error| match e {
                Error::Numerical(m) => Error::Numerical(format!(
                    "case {} at t={:.6} months (dt={dt:.3e}): {m}",
                    case.case_id, state.t
                )),
                other => other,
            };
            let pres = pressure_solve(sys, &state, dt_s, status, ctl.rtol).map_err(step)?;
            let tr = saturation_update(sys, &state, &pres.p, dt_s, status).map_err(step)?;
            let ds_max = tr
                .sg
                .data()
                .iter()
                .zip(state.sg.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            injected += tr.injected;
            produced += tr.produced;
            out.clamp_discrepancy += tr.clamp_discrepancy;
            out.pressure_steps += 1;
            let t_new = if dt == end - state.t { end } else { state.t + dt };
            state = SimState::new(pres.p, tr.sg, t_new);

            // Project the saturation change onto the requested step length so that
            // steps cut short at month ends do not throttle the controller.
            let projected = ds_max * requested / dt;
            let growth = if projected > 0.0 { (ctl.ds_target / projected).min(2.0) } else { 2.0 };
            dt_next = (requested * growth).clamp(ctl.min_dt_months, ctl.max_dt_months);
        }
        if month % sched.snapshot_every == 0 {
            out.in_place_series.push(co2_in_place(sys, &state));
            out.injected_volume_series.push(injected);
            out.produced_volume_series.push(produced);
            out.snapshots.push(state.clone());
        }
    }
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}
