//! Right-preconditioned Krylov methods: GMRES (fixed preconditioner),
//! flexible GMRES (preconditioner may change between iterations), and
//! preconditioned CG for the symmetric positive definite product solves.
//!
//! Convergence is measured as the relative residual `|b - A x| / |b|`; a
//! solve that exhausts its budget returns a tagged nonconvergence error
//! rather than a best-effort answer, so callers can propagate "no
//! convergence" verdicts through nested solver levels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

use super::LevelConfig;

/// Anything that can apply a square matrix to a vector.  The application is
/// fallible because matrix-free operators may run nested solves of their
/// own.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self * x)
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.matvec(x))
    }
}

/// Approximate inverse applied on the right of the operator.  Applications
/// may run nested solves, hence the fallible signature; flexible GMRES
/// tolerates a different action on every call.
pub trait Preconditioner {
    fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Identity preconditioner: turns the preconditioned methods into their
/// plain variants.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(r.clone())
    }
}

/// Iteration trace of one Krylov solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterStats {
    pub level: String,
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial
    /// value 1 (or 0 for a zero right-hand side).
    pub residuals: Vec<f64>,
    pub final_residual: f64,
}

/// GMRES with a fixed right preconditioner.  `None` solves the
/// unpreconditioned system.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &DVector<f64>,
    precond: Option<&dyn Preconditioner>,
    level: &'static str,
    cfg: &LevelConfig,
) -> Result<(DVector<f64>, IterStats)> {
    arnoldi_solve(op, b, precond, level, cfg)
}

/// Flexible GMRES: identical engine, named separately because it is the
/// variant whose convergence theory permits a preconditioner that changes
/// between iterations (inner solves truncated at loose tolerances).  The
/// engine always stores the preconditioned basis, which is exactly the
/// flexible formulation.
pub fn fgmres(
    op: &dyn LinearOperator,
    b: &DVector<f64>,
    precond: Option<&dyn Preconditioner>,
    level: &'static str,
    cfg: &LevelConfig,
) -> Result<(DVector<f64>, IterStats)> {
    arnoldi_solve(op, b, precond, level, cfg)
}

fn arnoldi_solve(
    op: &dyn LinearOperator,
    b: &DVector<f64>,
    precond: Option<&dyn Preconditioner>,
    level: &'static str,
    cfg: &LevelConfig,
) -> Result<(DVector<f64>, IterStats)> {
    cfg.validate()?;
    let n = b.len();
    if op.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "{level}: operator dimension {} vs right-hand side {n}",
            op.dim()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{level}: right-hand side contains non-finite entries"
        )));
    }
    let bnorm = b.norm();
    let mut stats =
        IterStats { level: level.to_string(), iterations: 0, residuals: vec![], final_residual: 0.0 };
    if bnorm == 0.0 {
        stats.residuals.push(0.0);
        return Ok((DVector::zeros(n), stats));
    }
    stats.residuals.push(1.0);

    let mut x = DVector::<f64>::zeros(n);
    let cycle_cap = cfg.restart.unwrap_or(cfg.max_iterations).min(cfg.max_iterations).min(n);

    'outer: while stats.iterations < cfg.max_iterations {
        let r = b - op.apply(&x)?;
        let beta = r.norm();
        let rel = beta / bnorm;
        if rel <= cfg.tol {
            stats.final_residual = rel;
            return Ok((x, stats));
        }
        // Basis of the (preconditioned) Krylov space, Hessenberg columns,
        // and the Givens-rotated residual vector.
        let mut v: Vec<DVector<f64>> = vec![&r / beta];
        let mut z: Vec<DVector<f64>> = Vec::new();
        let mut h_cols: Vec<Vec<f64>> = Vec::new();
        let mut givens: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];

        for j in 0..cycle_cap {
            if stats.iterations >= cfg.max_iterations {
                break;
            }
            let zj = match precond {
                Some(m) => m.apply(&v[j])?,
                None => v[j].clone(),
            };
            let mut w = op.apply(&zj)?;
            z.push(zj);
            let mut col = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = w.dot(vi);
                w.axpy(-hij, vi, 1.0);
                col[i] = hij;
            }
            // One re-orthogonalization sweep when cancellation ate most of
            // the new direction.
            let col_scale = col.iter().map(|c| c.abs()).fold(w.norm(), f64::max);
            if w.norm() < 1e-3 * col_scale.max(1e-300) {
                for (i, vi) in v.iter().enumerate() {
                    let corr = w.dot(vi);
                    w.axpy(-corr, vi, 1.0);
                    col[i] += corr;
                }
            }
            let hnext = w.norm();
            col[j + 1] = hnext;

            // Rotate the new column through the accumulated Givens pairs,
            // then create the pair that annihilates the subdiagonal.
            for (i, &(c, s)) in givens.iter().enumerate() {
                let tmp = c * col[i] + s * col[i + 1];
                col[i + 1] = -s * col[i] + c * col[i + 1];
                col[i] = tmp;
            }
            let (c, s) = {
                let (a, bb) = (col[j], col[j + 1]);
                let r = a.hypot(bb);
                if r == 0.0 {
                    (1.0, 0.0)
                } else {
                    (a / r, bb / r)
                }
            };
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            givens.push((c, s));
            g.push(-s * g[j]);
            g[j] *= c;
            h_cols.push(col);

            stats.iterations += 1;
            let rel_est = g[j + 1].abs() / bnorm;
            stats.residuals.push(rel_est);

            let breakdown = hnext <= 1e-14 * col_scale.max(f64::MIN_POSITIVE);
            if breakdown && rel_est > cfg.tol {
                return Err(Error::Breakdown { level: level.to_string(), iteration: stats.iterations });
            }
            if rel_est <= cfg.tol || breakdown {
                update_solution(&mut x, &h_cols, &g, &z);
                let true_rel = (b - op.apply(&x)?).norm() / bnorm;
                stats.final_residual = true_rel;
                if true_rel <= cfg.tol.max(rel_est * 10.0) {
                    *stats.residuals.last_mut().unwrap() = true_rel;
                    return Ok((x, stats));
                }
                // Estimated convergence not confirmed by the true residual:
                // restart from the current iterate.
                continue 'outer;
            }
            if j + 1 == cycle_cap {
                break;
            }
            v.push(&w / hnext);
        }
        update_solution(&mut x, &h_cols, &g, &z);
    }
    let final_rel = (b - op.apply(&x)?).norm() / bnorm;
    Err(Error::NoConvergence {
        level: level.to_string(),
        iterations: stats.iterations,
        residual: final_rel,
    })
}

/// Solves the triangular least-squares system accumulated by the rotations
/// and adds the correction `Z y` to `x`.
fn update_solution(x: &mut DVector<f64>, h_cols: &[Vec<f64>], g: &[f64], z: &[DVector<f64>]) {
    let k = h_cols.len();
    if k == 0 {
        return;
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (j, yj) in y.iter().enumerate().take(k).skip(i + 1) {
            acc -= h_cols[j][i] * yj;
        }
        y[i] = acc / h_cols[i][i];
    }
    for (yi, zi) in y.iter().zip(z) {
        x.axpy(*yi, zi, 1.0);
    }
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// operators (the divergence-gradient product solves).  The preconditioner
/// must be symmetric positive definite as well.
pub fn cg(
    op: &dyn LinearOperator,
    b: &DVector<f64>,
    precond: Option<&dyn Preconditioner>,
    level: &'static str,
    cfg: &LevelConfig,
) -> Result<(DVector<f64>, IterStats)> {
    cfg.validate()?;
    let n = b.len();
    if op.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "{level}: operator dimension {} vs right-hand side {n}",
            op.dim()
        )));
    }
    let bnorm = b.norm();
    let mut stats =
        IterStats { level: level.to_string(), iterations: 0, residuals: vec![], final_residual: 0.0 };
    if bnorm == 0.0 {
        stats.residuals.push(0.0);
        return Ok((DVector::zeros(n), stats));
    }
    stats.residuals.push(1.0);

    let mut x = DVector::<f64>::zeros(n);
    let mut r = b.clone();
    let mut z = match precond {
        Some(m) => m.apply(&r)?,
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    while stats.iterations < cfg.max_iterations {
        let q = op.apply(&p)?;
        let pq = p.dot(&q);
        if pq <= 0.0 {
            return Err(Error::Breakdown {
                level: level.to_string(),
                iteration: stats.iterations + 1,
            });
        }
        let alpha = rz / pq;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &q, 1.0);
        stats.iterations += 1;
        let rel = r.norm() / bnorm;
        stats.residuals.push(rel);
        if rel <= cfg.tol {
            stats.final_residual = rel;
            return Ok((x, stats));
        }
        z = match precond {
            Some(m) => m.apply(&r)?,
            None => r.clone(),
        };
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &p * beta;
    }
    let final_rel = (b - op.apply(&x)?).norm() / bnorm;
    Err(Error::NoConvergence {
        level: level.to_string(),
        iterations: stats.iterations,
        residual: final_rel,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn level_cfg(tol: f64, max: usize) -> LevelConfig {
        LevelConfig { tol, max_iterations: max, restart: None }
    }

    fn residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (b - a * x).norm() / b.norm()
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = DMatrix::<f64>::identity(6, 6);
        let b = DVector::from_fn(6, |i, _| 1.0 + i as f64);
        let (x, stats) = gmres(&a, &b, None, "outer", &level_cfg(1e-12, 10)).unwrap();
        assert_eq!(stats.iterations, 1);
        assert_abs_diff_eq!((x - b).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_system_terminates_within_dimension_steps() {
        let a = DMatrix::from_diagonal(&DVector::from_fn(8, |i, _| 1.0 + i as f64));
        let b = DVector::from_element(8, 1.0);
        let (x, stats) = gmres(&a, &b, None, "outer", &level_cfg(1e-12, 20)).unwrap();
        assert!(stats.iterations <= 8, "took {}", stats.iterations);
        assert!(residual(&a, &x, &b) <= 1e-12);
        for i in 0..8 {
            assert_abs_diff_eq!(x[i], 1.0 / (1.0 + i as f64), epsilon = 1e-11);
        }
    }

    #[test]
    fn zero_right_hand_side_returns_zero_without_iterating() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::zeros(4);
        let (x, stats) = gmres(&a, &b, None, "outer", &level_cfg(1e-10, 5)).unwrap();
        assert_eq!(stats.iterations, 0);
        assert_eq!(x, DVector::zeros(4));
        let (x, stats) = cg(&a, &b, None, "product", &level_cfg(1e-10, 5)).unwrap();
        assert_eq!(stats.iterations, 0);
        assert_eq!(x, DVector::zeros(4));
    }

    #[test]
    fn nonconvergence_is_reported_with_the_level_tag() {
        // An orthogonal two-cycle keeps the unpreconditioned residual flat.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        match gmres(&a, &b, None, "schur", &level_cfg(1e-14, 1)) {
            Err(Error::NoConvergence { level, iterations, .. }) => {
                assert_eq!(level, "schur");
                assert_eq!(iterations, 1);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn restarted_gmres_still_converges() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let b = DVector::from_element(n, 1.0);
        let mut cfg = level_cfg(1e-10, 300);
        cfg.restart = Some(5);
        let (x, stats) = gmres(&a, &b, None, "outer", &cfg).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-10);
        assert!(stats.iterations > 5, "restarts should have triggered");
    }

    #[test]
    fn right_preconditioning_with_the_exact_inverse_is_direct() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        struct Inv(DMatrix<f64>);
        impl Preconditioner for Inv {
            fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(&self.0 * r)
            }
        }
        let inv = Inv(a.clone().try_inverse().unwrap());
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, stats) = fgmres(&a, &b, Some(&inv), "outer", &level_cfg(1e-12, 10)).unwrap();
        assert_eq!(stats.iterations, 1);
        assert!(residual(&a, &x, &b) <= 1e-12);
    }

    #[test]
    fn cg_solves_spd_systems_and_flags_indefinite_ones() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let (x, stats) = cg(&a, &b, None, "product", &level_cfg(1e-12, 20)).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-12);
        assert!(stats.iterations <= 3);

        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        match cg(&indef, &b, None, "product", &level_cfg(1e-12, 10)) {
            Err(Error::Breakdown { level, .. }) => assert_eq!(level, "product"),
            other => panic!("expected breakdown, got {other:?}"),
        }
    }

    #[test]
    fn residual_history_is_monotone_enough_and_final_value_is_true() {
        let n = 12;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                3.0 + i as f64
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let b = DVector::from_fn(n, |i, _| (i as f64 + 1.0).sin());
        let (x, stats) = gmres(&a, &b, None, "outer", &level_cfg(1e-11, 50)).unwrap();
        assert_eq!(stats.residuals.len(), stats.iterations + 1);
        assert_abs_diff_eq!(stats.final_residual, residual(&a, &x, &b), epsilon = 1e-13);
        assert!(stats.final_residual <= 1e-11);
    }
}
