//! Cross-checks the closed-form symbols against the assembled operators:
//! interior blocks of the scaled saddle matrices must reproduce the symbol
//! coefficients, and the interior rows of the dense Schur complement must
//! reproduce the Fourier coefficients of the finite-mesh Schur symbol.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pipeflow_core::assembly::{assemble_saddle_system, SaddleSystem};
use pipeflow_core::grid::{build_staggered_grid, build_staggered_grid_3d};
use pipeflow_core::structured::BlockSymbol;
use pipeflow_core::symbols::{
    symbol_divergence, symbol_divergence_3d, symbol_gradient, symbol_gradient_3d,
    symbol_momentum, symbol_momentum_3d, symbol_penalty, symbol_penalty_3d, symbol_schur_dx,
    symbol_schur_dx_3d, PhysicalParams,
};

const RHO: f64 = 1000.0;
const MU: f64 = 1e-3;

fn real_coeff(sym: &BlockSymbol, k: i64) -> DMatrix<f64> {
    sym.coefficient(k)
        .expect("trigonometric symbol stores its coefficients")
        .map(|z| z.re)
}

fn rel_diff(got: &DMatrix<f64>, want: &DMatrix<f64>, reference: f64) -> f64 {
    (got - want).amax() / reference
}

/// Dense column-scaled Schur complement `(1/dt) E - D N^{-1} (1/dt) G`.
fn assembled_scaled_schur(sys: &SaddleSystem) -> DMatrix<f64> {
    let dt = sys.grid.dt();
    let n = sys.momentum.to_dense();
    let g = sys.gradient.to_dense() / dt;
    let n_inv_g = n.lu().solve(&g).expect("momentum matrix is invertible");
    sys.penalty.to_dense() / dt - sys.divergence.to_dense() * n_inv_g
}

/// Periodic-trapezoid Fourier coefficient `t_k` of a 2x2 symbol; the
/// symbols here have real coefficients, so the imaginary parts only carry
/// quadrature noise.
fn symbol_fourier_coefficient(sym: &BlockSymbol, k: i64, points: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::<Complex64>::zeros(2, 2);
    for j in 0..points {
        let theta = 2.0 * PI * j as f64 / points as f64;
        let phase = Complex64::from_polar(1.0 / points as f64, -(k as f64) * theta);
        acc += sym.eval(theta) * phase;
    }
    acc.map(|z| z.re)
}

#[test]
fn assembled_interior_blocks_match_the_symbol_coefficients() {
    let grid = build_staggered_grid(8, 1.0, |_| 0.025, 1.0).unwrap();
    let sys = assemble_saddle_system(&grid, 1, 3, None, RHO, MU, 1.0).unwrap();
    let p = PhysicalParams::for_grid(&grid, RHO, MU);
    let dt = grid.dt();
    let j = 4;

    let g = symbol_gradient(&p).unwrap();
    let g0 = real_coeff(&g, 0);
    let g_ref = g0.amax();
    assert!(rel_diff(&(sys.gradient.block(j, j).unwrap() / dt), &g0, g_ref) < 1e-13);
    assert!(rel_diff(&(sys.gradient.block(j, j - 1).unwrap() / dt), &real_coeff(&g, 1), g_ref) < 1e-13);
    assert!(sys.gradient.block(j, j + 1).map_or(true, |b| b.amax() == 0.0));

    let d = symbol_divergence(&p).unwrap();
    let d_ref = real_coeff(&d, 0).amax();
    assert!(rel_diff(sys.divergence.block(j, j).unwrap(), &real_coeff(&d, 0), d_ref) < 1e-13);
    assert!(rel_diff(sys.divergence.block(j, j + 1).unwrap(), &real_coeff(&d, -1), d_ref) < 1e-13);
    assert!(sys.divergence.block(j, j - 1).map_or(true, |b| b.amax() == 0.0));

    let e = symbol_penalty(&p).unwrap();
    let dx = grid.dx();
    let e_ref = real_coeff(&e, 0).amax();
    for k in -1i64..=1 {
        let col = (j as i64 - k) as usize;
        let block = sys.penalty.block(j, col).unwrap() / dx;
        assert!(rel_diff(&block, &real_coeff(&e, k), e_ref) < 1e-13, "penalty coefficient {k}");
    }

    // The momentum off-diagonal blocks come from the axial face terms alone
    // and match the symbol exactly; the diagonal block also carries the
    // transverse-gradient term the symbol drops, which at this width sits
    // at a few parts in a thousand of the block norm.
    let f_n = symbol_momentum(&p).unwrap();
    let n_ref = real_coeff(&f_n, 0).amax();
    for k in [-1i64, 1] {
        let col = (j as i64 - k) as usize;
        let rel = rel_diff(sys.momentum.block(j, col).unwrap(), &real_coeff(&f_n, k), n_ref);
        assert!(rel < 1e-12, "momentum coefficient {k}: rel {rel:.3e}");
    }
    let rel0 = rel_diff(sys.momentum.block(j, j).unwrap(), &real_coeff(&f_n, 0), n_ref);
    assert!(rel0 < 8e-3, "momentum diagonal: rel {rel0:.3e}");
}

#[test]
fn momentum_symbol_error_shrinks_in_the_mass_dominated_regime() {
    let grid = build_staggered_grid(32, 1.0, |_| 2.0, 1.0).unwrap();
    let sys = assemble_saddle_system(&grid, 1, 3, None, RHO, MU, 1.0).unwrap();
    let p = PhysicalParams::for_grid(&grid, RHO, MU);
    let f_n = symbol_momentum(&p).unwrap();
    let n_ref = real_coeff(&f_n, 0).amax();
    let j = 16;
    for k in -1i64..=1 {
        let col = (j as i64 - k) as usize;
        let rel = rel_diff(sys.momentum.block(j, col).unwrap(), &real_coeff(&f_n, k), n_ref);
        assert!(rel < 1e-6, "momentum coefficient {k}: rel {rel:.3e}");
    }
}

#[test]
fn assembled_schur_interior_blocks_match_the_symbol_coefficients() {
    let cases = [("water duct", 0.025, 16usize, 8e-3), ("mass dominated", 2.0, 32, 1e-6)];
    for (label, width, n, tol) in cases {
        let grid = build_staggered_grid(n, 1.0, move |_| width, 1.0).unwrap();
        let sys = assemble_saddle_system(&grid, 1, 3, None, RHO, MU, 1.0).unwrap();
        let p = PhysicalParams::for_grid(&grid, RHO, MU);
        let schur = assembled_scaled_schur(&sys);
        let s_dx = symbol_schur_dx(&p).unwrap();
        let reference = symbol_fourier_coefficient(&s_dx, 0, 2048).amax();
        let j = n / 2;
        for k in -2i64..=2 {
            let col = (j as i64 - k) as usize;
            let block = schur.view((2 * j, 2 * col), (2, 2)).clone_owned();
            let want = symbol_fourier_coefficient(&s_dx, k, 2048);
            let rel = rel_diff(&block, &want, reference);
            assert!(rel < tol, "{label}, Schur coefficient {k}: rel {rel:.3e}");
        }
    }
}

#[test]
fn assembled_3d_blocks_and_schur_match_their_symbols() {
    let grid = build_staggered_grid_3d(12, 1.0, |_| 1.5, |_| 1.0, 1.0).unwrap();
    let sys = assemble_saddle_system(&grid, 1, 2, Some(2), RHO, MU, 1.0).unwrap();
    let p = PhysicalParams::for_grid(&grid, RHO, MU);
    let dt = grid.dt();
    let dx = grid.dx();
    let j = 6;

    let g = symbol_gradient_3d(&p).unwrap();
    let g_ref = real_coeff(&g, 0).amax();
    assert!(rel_diff(&(sys.gradient.block(j, j).unwrap() / dt), &real_coeff(&g, 0), g_ref) < 1e-12);
    assert!(rel_diff(&(sys.gradient.block(j, j - 1).unwrap() / dt), &real_coeff(&g, 1), g_ref) < 1e-12);

    let d = symbol_divergence_3d(&p).unwrap();
    let d_ref = real_coeff(&d, 0).amax();
    assert!(rel_diff(sys.divergence.block(j, j).unwrap(), &real_coeff(&d, 0), d_ref) < 1e-12);
    assert!(rel_diff(sys.divergence.block(j, j + 1).unwrap(), &real_coeff(&d, -1), d_ref) < 1e-12);

    let e = symbol_penalty_3d(&p).unwrap();
    let e_ref = real_coeff(&e, 0).amax();
    for k in -1i64..=1 {
        let col = (j as i64 - k) as usize;
        let block = sys.penalty.block(j, col).unwrap() / dx;
        assert!(rel_diff(&block, &real_coeff(&e, k), e_ref) < 1e-12, "penalty coefficient {k}");
    }

    let f_n = symbol_momentum_3d(&p).unwrap();
    let n_ref = real_coeff(&f_n, 0).amax();
    for k in -1i64..=1 {
        let col = (j as i64 - k) as usize;
        let rel = rel_diff(sys.momentum.block(j, col).unwrap(), &real_coeff(&f_n, k), n_ref);
        assert!(rel < 1e-5, "momentum coefficient {k}: rel {rel:.3e}");
    }

    let schur = assembled_scaled_schur(&sys);
    let s_dx = symbol_schur_dx_3d(&p).unwrap();
    let reference = symbol_fourier_coefficient(&s_dx, 0, 2048).amax();
    for k in -1i64..=1 {
        let col = (j as i64 - k) as usize;
        let block = schur.view((2 * j, 2 * col), (2, 2)).clone_owned();
        let rel = rel_diff(&block, &symbol_fourier_coefficient(&s_dx, k, 2048), reference);
        assert!(rel < 1e-5, "Schur coefficient {k}: rel {rel:.3e}");
    }
}
