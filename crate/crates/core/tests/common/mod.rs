#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use plumecast::config::RunConfig;
use plumecast::data::CaseInputs;
use plumecast::sim::{
    corey_relperm, simulate, Archive, FlowSystem, FluidProps, Grid, RateSchedule, RelPermModel, RockFields, Schedule,
    SimCase, StepControls, WellSpec,
};
use plumecast::units::{MILLIDARCY, SECONDS_PER_MONTH};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn smoke_config() -> RunConfig {
    RunConfig::load(&repo_root().join("configs/smoke.conf")).expect("smoke config parses")
}

/// Inputs and monthly archives of every case of the smoke configuration, simulated once.
pub fn smoke_cases() -> &'static [(CaseInputs, Archive)] {
    static CASES: OnceLock<Vec<(CaseInputs, Archive)>> = OnceLock::new();
    CASES.get_or_init(|| {
        let cfg = smoke_config();
        cfg.design
            .case_specs()
            .iter()
            .map(|spec| {
                let case = cfg.design.build_case(spec).expect("smoke case builds");
                let result = simulate(&case).expect("smoke case simulates");
                (CaseInputs::from_case(&case), Archive::from_result(&result))
            })
            .collect()
    })
}

/// Fractional flow of gas for the default Corey model without gravity.
fn frac_flow(sg: f64, relperm: &RelPermModel, fl: &FluidProps) -> f64 {
    let (krw, krg) = corey_relperm(sg, relperm);
    let (lw, lg) = (krw / fl.mu_w, krg / fl.mu_g);
    lg / (lw + lg)
}

/// Welge construction: the shock saturation maximises `f(S)/S` from the initial state
/// `S = 0`, and the front travels at `f(S_f)/S_f` pore volumes per pore volume injected.
fn welge_front(relperm: &RelPermModel, fl: &FluidProps) -> (f64, f64) {
    let top = 1.0 - relperm.swc;
    let mut best = (0.0, 0.0);
    let n = 200_000;
    for k in 1..=n {
        let s = top * k as f64 / n as f64;
        let slope = frac_flow(s, relperm, fl) / s;
        if slope > best.1 {
            best = (s, slope);
        }
    }
    best
}

/// One-dimensional gas flood into water, returning the front position error (m).
pub fn buckley_leverett_error(nx: usize, dx: f64) -> (f64, f64) {
    let grid = Grid::new(nx + 1, 1, dx, 10.0).unwrap();
    let rock = RockFields::uniform(&grid, 500.0 * MILLIDARCY, 0.2, 0.1).unwrap();
    let fluids = FluidProps::default().incompressible().without_gravity();
    let length = nx as f64 * dx;
    let pore_volume = length * 10.0 * 1.0 * 0.2;
    let months = 10u32;
    let rate = 0.3 * pore_volume / (months as f64 * SECONDS_PER_MONTH);
    let inj = WellSpec::injector("I", vec![(0, 0)], RateSchedule::constant(rate, 2 * months).unwrap());
    let sys = FlowSystem::new(
        grid,
        rock,
        fluids.clone(),
        RelPermModel::default(),
        vec![inj],
        vec![(nx, 2.0e7)],
    )
    .unwrap();
    let mut c = SimCase {
        case_id: 1,
        seed: 0,
        system: sys,
        schedule: Schedule::new(2 * months, 2 * months + 1, 1).unwrap(),
        p_mid: 2.0e7,
        controls: StepControls::default(),
    };
    c.controls.ds_target = 0.05;
    let r = simulate(&c).unwrap();
    let snap = &r.snapshots[months as usize - 1];
    let (s_front, speed) = welge_front(&c.system.relperm, &fluids);
    let analytic = speed * 0.3 * length;
    // Numerical front: first cell centre whose saturation drops below half the shock value.
    let ix = (0..nx).find(|&i| snap.sg.get(i, 0) < 0.5 * s_front).unwrap_or(nx);
    let numeric = (ix as f64) * dx;
    ((numeric - analytic).abs(), analytic)
}
