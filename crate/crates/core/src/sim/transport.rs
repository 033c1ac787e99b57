use super::state::SimState;
use super::system::{FlowSystem, WellStatus};
use crate::error::{Error, Result};
use crate::field::Field2D;

/// Courant number bound for every transport sub-step.
pub const MAX_CFL: f64 = 0.5;
const MAX_SUBSTEPS: usize = 5_000_000;

/// Result of one explicit transport step. Volumes are CO₂ at the reference
/// pressure (m³), i.e. mass divided by the reference density.
#[derive(Debug, Clone)]
pub struct TransportOutcome {
    pub sg: Field2D,
    pub injected: f64,
    pub produced: f64,
    /// Signed CO₂ volume removed (positive) or added by clamping saturations.
    pub clamp_discrepancy: f64,
    pub substeps: usize,
}

/// Moves gas above `sg_max` upward, then sideways along the top row, so that no
/// cell overfills and nothing is lost. Returns the volume pushed into fixed-pressure
/// cells. Gas with nowhere to go stays put and is clamped by the caller.
fn spill_excess(sys: &FlowSystem, mass: &mut [f64], cap: &[f64], sg_max: f64) -> f64 {
    let nx = sys.grid.nx;
    let n = mass.len();
    let mut leaked = 0.0;
    let excess = |c: usize, m: &[f64]| m[c] - sg_max * cap[c];
    let mut push = |from: usize, to: usize, m: &mut [f64], amount: f64| {
        m[from] -= amount;
        if sys.is_fixed[to] {
            leaked += amount;
        } else {
            m[to] += amount;
        }
    };
    for c in (nx..n).rev() {
        if !sys.is_fixed[c] && excess(c, mass) > 0.0 {
            let e = excess(c, mass);
            push(c, c - nx, mass, e);
        }
    }
    for c in 0..nx - 1 {
        if !sys.is_fixed[c] && excess(c, mass) > 0.0 {
            let e = excess(c, mass);
            push(c, c + 1, mass, e);
        }
    }
    for c in (1..nx).rev() {
        if !sys.is_fixed[c] && excess(c, mass) > 0.0 {
            let e = excess(c, mass);
            push(c, c - 1, mass, e);
        }
    }
    leaked
}

/// Explicit upwind CO₂ transport over `dt` with the pressure frozen at `p_new`.
///
/// The conserved quantity per cell is `φ(p)·V·b_g(p)·S_g`. Face fluxes are split
/// into a viscous part `f_g·u_t`, upwinded by the total flux the pressure step
/// balanced, and a buoyancy part `T·λgλw/λt·Δρ·g·ΔZ` in which the gas mobility
/// comes from the lower cell and the water mobility from the upper one. That
/// pairing makes a full cell refuse further buoyant gas, so saturations stay in
/// range up to compressibility effects. Overfilled cells spill upward and clamping
/// is a last resort. Sub-steps
/// keep the Courant number at or below [`MAX_CFL`].
/// Fixed-pressure cells act as boundary reservoirs: they keep their saturation and
/// gas crossing into or out of them is booked as produced or injected.
pub fn saturation_update(
    sys: &FlowSystem,
    state: &SimState,
    p_new: &Field2D,
    dt: f64,
    status: WellStatus,
) -> Result<TransportOutcome> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let n = sys.n_cells();
    if p_new.len() != n || state.sg.len() != n || state.p.len() != n {
        return Err(Error::Contract("state does not match the flow system grid".into()));
    }
    let fl = &sys.fluids;
    let p_old = state.p.data();
    let p = p_new.data();
    let sg0 = state.sg.data();

    let b: Vec<f64> = p.iter().map(|&v| fl.b_gas(v)).collect();
    let pv: Vec<f64> = (0..n).map(|c| sys.pore_volume_at(c, p[c])).collect();
    let cap: Vec<f64> = (0..n).map(|c| pv[c] * b[c]).collect();
    let mut mass: Vec<f64> = (0..n)
        .map(|c| sys.pore_volume_at(c, p_old[c]) * fl.b_gas(p_old[c]) * sg0[c])
        .collect();
    let mob0: Vec<(f64, f64)> = sg0.iter().map(|&s| sys.mobilities(s)).collect();

    // Per-face data indexed by the upper-left cell: total volumetric flux from `c`
    // to its east/south neighbour (m³/s) and, on south faces, `T·Δρ·g·dz`.
    let nx = sys.grid.nx;
    let (fw_slope, mob_slope) = slopes(sys);
    let drho = fl.rho_w - fl.rho_g;
    let mut ut_e = vec![0.0; n];
    let mut ut_s = vec![0.0; n];
    let mut grav_s = vec![0.0; n];
    let mut rate = vec![0.0; n];
    sys.for_each_face(|c, nb, t, dzz| {
        let dp0 = p_old[c] - p_old[nb];
        let lw = upwind(dp0 - fl.rho_w * fl.g * dzz, mob0[c].0, mob0[nb].0);
        let lg = upwind(dp0 - fl.rho_g * fl.g * dzz, mob0[c].1, mob0[nb].1);
        let dp = p[c] - p[nb];
        let ut = t * (lw * (dp - fl.rho_w * fl.g * dzz) + lg * (dp - fl.rho_g * fl.g * dzz));
        let grav = t * drho * fl.g * dzz.abs();
        if nb == c + 1 {
            ut_e[c] = ut;
        } else {
            ut_s[c] = ut;
            grav_s[c] = grav;
        }
        let r = ut.abs() * fw_slope + grav * mob_slope;
        rate[c] += r;
        rate[nb] += r;
    });
    let sources = sys.injection_sources(status);
    let producers: Vec<(usize, f64)> = sys
        .producer_perfs(status)
        .into_iter()
        .filter_map(|(c, wi, bhp)| {
            let q = wi * (mob0[c].0 + mob0[c].1) * (p[c] - bhp);
            (q > 0.0).then_some((c, q))
        })
        .collect();
    for &(c, q) in &producers {
        rate[c] += q * fw_slope;
    }

    let b_max = b.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut max_courant_rate: f64 = 0.0;
    for c in 0..n {
        if !sys.is_fixed[c] {
            max_courant_rate = max_courant_rate.max(rate[c] * b_max / cap[c]);
        }
    }
    let substeps = ((dt * max_courant_rate / MAX_CFL).ceil() as usize).max(1);
    if substeps > MAX_SUBSTEPS {
        return Err(Error::Numerical(format!(
            "transport would need {substeps} sub-steps for dt={dt:.3e} s"
        )));
    }
    let h = dt / substeps as f64;

    let sg_of = |c: usize, m: &[f64]| if sys.is_fixed[c] { sg0[c] } else { m[c] / cap[c] };
    let mut injected = 0.0;
    let mut produced = 0.0;
    let mut mob = vec![(0.0, 0.0); n];
    let mut dm = vec![0.0; n];
    let mut flow_e = vec![0.0; n];
    let mut flow_s = vec![0.0; n];
    for _ in 0..substeps {
        for c in 0..n {
            mob[c] = sys.mobilities(sg_of(c, &mass));
        }
        for c in 0..n {
            let mut flow = 0.0;
            let ut = ut_e[c];
            if ut != 0.0 {
                let up = if ut > 0.0 { c } else { c + 1 };
                flow = b[up] * frac_gas(mob[up]) * ut;
            }
            flow_e[c] = flow;
            let mut flow = 0.0;
            let ut = ut_s[c];
            if ut != 0.0 {
                let up = if ut > 0.0 { c } else { c + nx };
                flow = b[up] * frac_gas(mob[up]) * ut;
            }
            if grav_s[c] != 0.0 {
                // Gas rises out of the lower cell while water sinks out of the upper one.
                let lg = mob[c + nx].1;
                let lw = mob[c].0;
                let lt = lg + lw;
                if lt > 0.0 {
                    flow -= b[c + nx] * lg * lw / lt * grav_s[c];
                }
            }
            flow_s[c] = flow;
        }
        for c in 0..n {
            let w = if c >= 1 { flow_e[c - 1] } else { 0.0 };
            let nn = if c >= nx { flow_s[c - nx] } else { 0.0 };
            dm[c] = ((w - flow_e[c]) + (nn - flow_s[c])) * h;
        }
        for &(c, q) in &sources {
            dm[c] += q * h;
            injected += q * h;
        }
        for &(c, q) in &producers {
            let out = b[c] * frac_gas(mob[c]) * q * h;
            dm[c] -= out;
            produced += out;
        }
        for c in 0..n {
            if sys.is_fixed[c] {
                // Gas leaving a boundary reservoir enters the domain.
                if dm[c] < 0.0 {
                    injected -= dm[c];
                } else {
                    produced += dm[c];
                }
            } else {
                mass[c] += dm[c];
            }
        }
        produced += spill_excess(sys, &mut mass, &cap, sys.relperm.sg_max());
    }

    let sg_max = sys.relperm.sg_max();
    let mut clamp_discrepancy = 0.0;
    let mut sg = Vec::with_capacity(n);
    for c in 0..n {
        if sys.is_fixed[c] {
            sg.push(sg0[c]);
            continue;
        }
        let s = mass[c] / cap[c];
        if !s.is_finite() {
            return Err(Error::Numerical(format!("non-finite CO2 saturation in cell {c}")));
        }
        let clamped = s.clamp(0.0, sg_max);
        clamp_discrepancy += (s - clamped) * cap[c];
        sg.push(clamped);
    }
    Ok(TransportOutcome {
        sg: Field2D::from_vec(sys.grid.nx, sys.grid.nz, sg)?,
        injected,
        produced,
        clamp_discrepancy,
        substeps,
    })
}

#[inline]
fn upwind(dphi: f64, lam_c: f64, lam_n: f64) -> f64 {
    if dphi > 0.0 {
        lam_c
    } else if dphi < 0.0 {
        lam_n
    } else {
        0.5 * (lam_c + lam_n)
    }
}

#[inline]
fn frac_gas((lw, lg): (f64, f64)) -> f64 {
    let lt = lw + lg;
    if lt > 0.0 {
        lg / lt
    } else {
        0.0
    }
}

/// Upper bounds on `d f_g/dS` and on the mobility slopes, from a fine sampling of
/// the curves with a safety margin. The buoyancy coefficient `λgλw/(λg+λw)` has
/// partial derivatives bounded by those of the individual mobilities.
fn slopes(sys: &FlowSystem) -> (f64, f64) {
    const SAMPLES: usize = 4000;
    let top = sys.relperm.sg_max();
    let mut fw: f64 = 0.0;
    let mut lam: f64 = 0.0;
    let mut prev = sys.mobilities(0.0);
    for k in 1..=SAMPLES {
        let ds = top / SAMPLES as f64;
        let cur = sys.mobilities(ds * k as f64);
        fw = fw.max((frac_gas(cur) - frac_gas(prev)).abs() / ds);
        lam = lam.max((cur.0 - prev.0).abs() / ds).max((cur.1 - prev.1).abs() / ds);
        prev = cur;
    }
    (1.1 * fw, 1.1 * lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{FluidProps, Grid, RelPermModel, RockFields};

    fn system(fixed: Vec<(usize, f64)>) -> FlowSystem {
        let grid = Grid::new(4, 3, 10.0, 10.0).unwrap();
        let rock = RockFields::uniform(&grid, 1e-13, 0.2, 0.1).unwrap();
        FlowSystem::new(grid, rock, FluidProps::default(), RelPermModel::default(), Vec::new(), fixed).unwrap()
    }

    #[test]
    fn spill_moves_excess_up_then_sideways() {
        let sys = system(Vec::new());
        let top = sys.relperm.sg_max();
        let cap = vec![2.0; 12];
        // Bottom-middle cell overfilled, everything above it already full.
        let mut mass = vec![0.0; 12];
        mass[1] = top * 2.0;
        mass[5] = top * 2.0;
        mass[9] = top * 2.0 + 0.3;
        let before: f64 = mass.iter().sum();
        let leaked = spill_excess(&sys, &mut mass, &cap, top);
        assert_eq!(leaked, 0.0);
        assert!((mass.iter().sum::<f64>() - before).abs() < 1e-15);
        assert!(mass.iter().zip(&cap).all(|(m, c)| *m <= top * c + 1e-15));
        assert!((mass[2] - 0.3).abs() < 1e-15, "{mass:?}");
    }

    #[test]
    fn spill_into_fixed_cell_is_reported() {
        let sys = system(vec![(1, 1e7)]);
        let top = sys.relperm.sg_max();
        let cap = vec![1.0; 12];
        let mut mass = vec![0.0; 12];
        mass[5] = top + 0.25;
        let leaked = spill_excess(&sys, &mut mass, &cap, top);
        assert!((leaked - 0.25).abs() < 1e-15);
        assert_eq!(mass[1], 0.0);
    }
}
