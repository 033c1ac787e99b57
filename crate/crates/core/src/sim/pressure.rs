use super::linsolve::{pcg, FivePoint};
use super::state::SimState;
use super::system::{FlowSystem, WellStatus};
use crate::error::{Error, Result};
use crate::field::Field2D;

#[derive(Debug, Clone)]
pub struct PressureSolution {
    pub p: Field2D,
    pub iterations: usize,
}

/// Upwind phase mobility for a face; exact potential ties average the two cells.
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

/// Implicit pressure step of IMPES.
///
/// Sums the phase balances into a total-fluid equation, discretised with two-point
/// fluxes and per-phase upwind mobilities frozen at `state`, gravity `ρ_α g ΔZ` on
/// every face, rate injectors as sources and bottom-hole-pressure producers as
/// implicit sinks. The system is solved for the pressure increment so that the
/// relative residual tolerance applies to the change over the step.
pub fn pressure_solve(
    sys: &FlowSystem,
    state: &SimState,
    dt: f64,
    status: WellStatus,
    rtol: f64,
) -> Result<PressureSolution> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let n = sys.n_cells();
    let p0 = state.p.data();
    let sg = state.sg.data();
    if p0.len() != n || sg.len() != n {
        return Err(Error::Contract("state does not match the flow system grid".into()));
    }
    let fl = &sys.fluids;
    let mob: Vec<(f64, f64)> = sg.iter().map(|&s| sys.mobilities(s)).collect();

    let mut op = FivePoint::zeros(sys.grid.nx, n);
    let mut rhs = vec![0.0; n];

    sys.for_each_face(|c, nb, t, dzz| {
        let dp = p0[c] - p0[nb];
        let lw = upwind(dp - fl.rho_w * fl.g * dzz, mob[c].0, mob[nb].0);
        let lg = upwind(dp - fl.rho_g * fl.g * dzz, mob[c].1, mob[nb].1);
        let coef = t * (lw + lg);
        let grav = t * (lw * fl.rho_w + lg * fl.rho_g) * fl.g * dzz;
        if nb == c + 1 {
            op.east[c] = coef;
        } else {
            op.south[c] = coef;
        }
        rhs[c] += grav;
        rhs[nb] -= grav;
    });

    let mut any_storage = false;
    for c in 0..n {
        op.diag[c] = op.coupling_sum(c);
        let acc = sys.pore_volume_at(c, p0[c]) * fl.total_compressibility(sg[c]) / dt;
        any_storage |= acc > 0.0;
        op.diag[c] += acc;
        rhs[c] += acc * p0[c];
    }
    for (c, q) in sys.injection_sources(status) {
        rhs[c] += q / fl.b_gas(p0[c]);
    }
    let producers = sys.producer_perfs(status);
    for &(c, wi, bhp) in &producers {
        let lt = mob[c].0 + mob[c].1;
        op.diag[c] += wi * lt;
        rhs[c] += wi * lt * bhp;
    }
    if !any_storage && producers.is_empty() && sys.fixed_pressure.is_empty() {
        return Err(Error::WellPosedness(
            "closed incompressible system without producers or fixed-pressure cells".into(),
        ));
    }

    // Residual of the old pressure; the unknown is the increment.
    let mut ap0 = vec![0.0; n];
    op.apply(p0, &mut ap0);
    let mut r0: Vec<f64> = rhs.iter().zip(&ap0).map(|(b, a)| b - a).collect();

    // Eliminate fixed-pressure cells symmetrically.
    let mut fixed_value = vec![0.0; n];
    for &(c, p) in &sys.fixed_pressure {
        fixed_value[c] = p;
    }
    if !sys.fixed_pressure.is_empty() {
        let nx = sys.grid.nx;
        for &(c, _) in &sys.fixed_pressure {
            let d = fixed_value[c] - p0[c];
            if c + 1 < n && op.east[c] != 0.0 && !sys.is_fixed[c + 1] {
                r0[c + 1] += op.east[c] * d;
            }
            if c >= 1 && op.east[c - 1] != 0.0 && !sys.is_fixed[c - 1] {
                r0[c - 1] += op.east[c - 1] * d;
            }
            if c + nx < n && op.south[c] != 0.0 && !sys.is_fixed[c + nx] {
                r0[c + nx] += op.south[c] * d;
            }
            if c >= nx && op.south[c - nx] != 0.0 && !sys.is_fixed[c - nx] {
                r0[c - nx] += op.south[c - nx] * d;
            }
        }
        for &(c, _) in &sys.fixed_pressure {
            op.diag[c] = 1.0;
            r0[c] = 0.0;
            op.east[c] = 0.0;
            op.south[c] = 0.0;
            if c >= 1 {
                op.east[c - 1] = 0.0;
            }
            if c >= nx {
                op.south[c - nx] = 0.0;
            }
        }
    }

    let mut delta = vec![0.0; n];
    let iterations = pcg(&op, &r0, &mut delta, rtol, 10 * n)?;
    let mut p = Vec::with_capacity(n);
    for c in 0..n {
        let v = if sys.is_fixed[c] {
            fixed_value[c]
        } else {
            p0[c] + delta[c]
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Numerical(format!("pressure {v} Pa in cell {c} is not physical")));
        }
        p.push(v);
    }
    Ok(PressureSolution {
        p: Field2D::from_vec(sys.grid.nx, sys.grid.nz, p)?,
        iterations,
    })
}
