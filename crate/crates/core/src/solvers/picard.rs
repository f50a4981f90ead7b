//! Picard linearization of one implicit time step: the convective term is
//! frozen at the previous iterate, the resulting linear saddle system is
//! solved by the preconditioned stack, and the loop repeats until the
//! velocity update stalls below tolerance.

use nalgebra::DVector;

use crate::assembly::{convective_rhs, ParabolicInlet, SaddleSystem};
use crate::error::{Error, Result};

use super::saddle::{solve_saddle, SchurStrategy};
use super::{SolverConfig, SolverReport};

/// Converged result of one time step.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    /// Velocity coefficients at the new time level.
    pub state: DVector<f64>,
    /// Physical pressure at the new time level (the solver's scaled
    /// pressure divided by `dt`).
    pub pressure: DVector<f64>,
    pub picard_iterations: usize,
    /// One linear-solve report per Picard iteration.
    pub reports: Vec<SolverReport>,
}

/// Advances `state_prev` through one implicit step of the closed system.
/// `sys` must already carry boundary conditions; the convective forcing is
/// rebuilt from the current iterate each sweep, so the linear solves all
/// share one assembled matrix.
pub fn picard_timestep(
    sys: &SaddleSystem,
    inlet: &ParabolicInlet,
    state_prev: &DVector<f64>,
    strategy: SchurStrategy,
    cfg: &SolverConfig,
) -> Result<PicardOutcome> {
    cfg.validate()?;
    if sys.bc.is_none() {
        return Err(Error::InvalidArgument(
            "picard_timestep needs a system with boundary conditions applied".into(),
        ));
    }
    let nu = sys.n_velocity();
    let np = sys.n_pressure();
    if state_prev.len() != nu {
        return Err(Error::DimensionMismatch(format!(
            "previous state has {} entries, velocity space has {nu}",
            state_prev.len()
        )));
    }

    let mass_prev = sys.mass.matvec(state_prev);
    let mut u_k = state_prev.clone();
    let mut reports = Vec::new();
    let mut prev_update = f64::INFINITY;
    let mut stall_streak = 0usize;

    for sweep in 1..=cfg.picard_max_iterations {
        let mut rhs_u = &mass_prev + convective_rhs(&sys.grid, &sys.vel_basis, &u_k, sys.rho, inlet)?;
        let mut rhs_p = DVector::zeros(np);
        sys.apply_bc_to_rhs(&mut rhs_u, &mut rhs_p);
        let mut rhs = DVector::zeros(nu + np);
        rhs.rows_mut(0, nu).copy_from(&rhs_u);
        rhs.rows_mut(nu, np).copy_from(&rhs_p);

        let (x, report) = solve_saddle(sys, &rhs, strategy, cfg)?;
        reports.push(report);
        let u_next = DVector::from(x.rows(0, nu).clone_owned());
        let update = (&u_next - &u_k).norm() / u_next.norm().max(f64::MIN_POSITIVE);

        if update < cfg.picard_tol {
            let pressure = DVector::from(x.rows(nu, np).clone_owned()) / sys.grid.dt();
            return Ok(PicardOutcome {
                state: u_next,
                pressure,
                picard_iterations: sweep,
                reports,
            });
        }

        if update >= prev_update {
            stall_streak += 1;
            if stall_streak >= cfg.picard_stall_window {
                return Err(Error::PicardDiverged(format!(
                    "velocity update stopped decreasing for {stall_streak} sweeps \
                     (last update {update:.3e} after {sweep} sweeps)"
                )));
            }
        } else {
            stall_streak = 0;
        }
        prev_update = update;
        u_k = u_next;
    }
    Err(Error::PicardDiverged(format!(
        "no convergence within {} sweeps (last update {prev_update:.3e})",
        cfg.picard_max_iterations
    )))
}
