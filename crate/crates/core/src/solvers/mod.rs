//! The preconditioned solver stack: Krylov methods, ILU(0), the circulant
//! preconditioners derived from the frequency symbols, the saddle-point
//! preconditioner built on inner momentum and Schur solves, and the
//! nonlinear Picard time-stepping driver.
//!
//! Levels are tagged with short names used in reports and errors:
//! `outer` (flexible GMRES on the whole saddle system), `schur` (GMRES on
//! the matrix-free Schur complement), `momentum` (GMRES with ILU(0) on the
//! momentum block), and `product` (CG on the divergence-gradient product
//! inside the least-squares commutator path).

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod ilu;
pub mod krylov;
pub mod picard;
pub mod precond;
pub mod saddle;

pub use ilu::{ilu0, Ilu0};
pub use krylov::{cg, fgmres, gmres, IterStats, LinearOperator, Preconditioner};
pub use picard::{picard_timestep, PicardOutcome};
pub use precond::{
    build_precond_cn, build_precond_cn_limit, build_precond_pn, CirculantPrecond, WidthMode,
};
pub use saddle::{solve_saddle, SaddlePreconditioner, SchurOperator, SchurStrategy};

/// Stopping control for one solver level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    /// Relative residual tolerance, strictly inside `(0, 1)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Restart length for the GMRES levels; `None` runs unrestarted.
    pub restart: Option<usize>,
}

impl LevelConfig {
    pub fn new(tol: f64, max_iterations: usize) -> Result<Self> {
        let cfg = LevelConfig { tol, max_iterations, restart: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidArgument("restart length must be positive".into()));
        }
        Ok(())
    }
}

/// Tolerances and budgets for the full stack.  The defaults pair the outer
/// flexible solve at 1e-8 with inner momentum/product solves at 1e-5 and
/// the Schur solve at 1e-6.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub outer: LevelConfig,
    pub schur: LevelConfig,
    pub momentum: LevelConfig,
    pub product: LevelConfig,
    /// Relative update norm below which the Picard iteration stops.
    pub picard_tol: f64,
    pub picard_max_iterations: usize,
    /// Number of consecutive non-decreasing Picard updates that flags
    /// divergence.
    pub picard_stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            outer: LevelConfig { tol: 1e-8, max_iterations: 200, restart: None },
            schur: LevelConfig { tol: 1e-6, max_iterations: 400, restart: None },
            momentum: LevelConfig { tol: 1e-5, max_iterations: 500, restart: None },
            product: LevelConfig { tol: 1e-5, max_iterations: 500, restart: None },
            picard_tol: 1e-8,
            picard_max_iterations: 25,
            picard_stall_window: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.schur.validate()?;
        self.momentum.validate()?;
        self.product.validate()?;
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "picard_tol must lie in (0, 1), got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iterations == 0 || self.picard_stall_window == 0 {
            return Err(Error::InvalidArgument(
                "picard iteration budget and stall window must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Iteration statistics of one inner level, aggregated over every call made
/// during an outer solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: String,
    pub calls: usize,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    pub total_iterations: usize,
}

/// Shared scratch the inner solvers append `(level, iterations)` pairs to;
/// one log belongs to one outer solve.
#[derive(Debug, Default)]
pub struct IterationLog {
    entries: RefCell<Vec<(&'static str, usize)>>,
}

impl IterationLog {
    pub fn record(&self, level: &'static str, iterations: usize) {
        self.entries.borrow_mut().push((level, iterations));
    }

    /// Per-level aggregates in first-seen order.
    pub fn summaries(&self) -> Vec<LevelSummary> {
        let entries = self.entries.borrow();
        let mut order: Vec<&'static str> = Vec::new();
        for (level, _) in entries.iter() {
            if !order.contains(level) {
                order.push(level);
            }
        }
        order
            .into_iter()
            .map(|level| {
                let counts: Vec<usize> = entries
                    .iter()
                    .filter(|(l, _)| *l == level)
                    .map(|&(_, c)| c)
                    .collect();
                let total: usize = counts.iter().sum();
                LevelSummary {
                    level: level.to_string(),
                    calls: counts.len(),
                    min_iterations: counts.iter().copied().min().unwrap_or(0),
                    max_iterations: counts.iter().copied().max().unwrap_or(0),
                    mean_iterations: total as f64 / counts.len().max(1) as f64,
                    total_iterations: total,
                }
            })
            .collect()
    }

    pub fn clear(&self) {
        self.entries.borrow_mut().clear();
    }
}

/// Outcome of one outer solve: the outer iteration trace, aggregates of
/// every inner level, and the wall time of the whole stack.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverReport {
    pub outer: IterStats,
    pub inner_levels: Vec<LevelSummary>,
    pub wall_time_secs: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_config_rejects_out_of_range_tolerances() {
        assert!(LevelConfig::new(0.0, 10).is_err());
        assert!(LevelConfig::new(1.0, 10).is_err());
        assert!(LevelConfig::new(1e-8, 0).is_err());
        assert!(LevelConfig::new(1e-8, 10).is_ok());
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.picard_tol = 2.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_pin_the_stack_tolerances() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.outer.tol, 1e-8);
        assert_eq!(cfg.schur.tol, 1e-6);
        assert_eq!(cfg.momentum.tol, 1e-5);
        assert_eq!(cfg.product.tol, 1e-5);
    }

    #[test]
    fn iteration_log_aggregates_per_level() {
        let log = IterationLog::default();
        log.record("momentum", 4);
        log.record("schur", 9);
        log.record("momentum", 6);
        let sums = log.summaries();
        assert_eq!(sums.len(), 2);
        assert_eq!(sums[0].level, "momentum");
        assert_eq!(sums[0].calls, 2);
        assert_eq!(sums[0].min_iterations, 4);
        assert_eq!(sums[0].max_iterations, 6);
        assert_eq!(sums[0].mean_iterations, 5.0);
        assert_eq!(sums[1].level, "schur");
        assert_eq!(sums[1].calls, 1);
        log.clear();
        assert!(log.summaries().is_empty());
    }

    #[test]
    fn solver_config_survives_a_json_round_trip() {
        let cfg = SolverConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SolverConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
