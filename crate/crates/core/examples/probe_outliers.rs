//! Scratch probe: cancellation ratio inside the Schur matvec
//! `S v = E v/dt - D N^-1 (G v/dt)` at the default parameters.

use nalgebra::DVector;
use pipeflow_core::assembly::{
    apply_boundary_conditions, assemble_saddle_system, ParabolicInlet,
};
use pipeflow_core::grid::build_staggered_grid;

fn main() {
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    for (rho, mu) in [(1000.0, 1e-3), (1000.0, 1e-2)] {
        for n in [10usize, 40, 160] {
            let grid = build_staggered_grid(n, 1.0, |_| 0.025, 1.0).unwrap();
            let mut sys = assemble_saddle_system(&grid, 1, 3, None, rho, mu, 1.0).unwrap();
            let inlet = ParabolicInlet::for_grid(&grid, 5e-6);
            apply_boundary_conditions(&mut sys, &inlet, 0.0).unwrap();
            let inv_dt = 1.0 / grid.dt();
            let nmat = sys.momentum.to_dense();
            let lu = nmat.lu();
            let np = sys.penalty.nrows();
            let csr = sys.momentum.to_csr();
            let ilu = pipeflow_core::solvers::ilu0(&csr).unwrap();
            let level = pipeflow_core::solvers::LevelConfig::new(1e-5, 500).unwrap();
            let mut worst_ratio: f64 = 0.0;
            let mut worst_err: f64 = 0.0;
            for _ in 0..20 {
                let v = DVector::from_fn(np, |_, _| next());
                let gv = sys.gradient.matvec(&v) * inv_dt;
                let nz = lu.solve(&gv).unwrap();
                let prod = sys.divergence.matvec(&nz);
                let sv = sys.penalty.matvec(&v) * inv_dt - &prod;
                worst_ratio = worst_ratio.max(prod.norm() / sv.norm());
                // Same matvec with the production inner solve at 1e-5.
                let (nz_it, _) = pipeflow_core::solvers::gmres(
                    &csr,
                    &gv,
                    Some(&ilu as &dyn pipeflow_core::solvers::Preconditioner),
                    "momentum",
                    &level,
                )
                .unwrap();
                let sv_it = sys.penalty.matvec(&v) * inv_dt - sys.divergence.matvec(&nz_it);
                worst_err = worst_err.max((&sv_it - &sv).norm() / sv.norm());
            }
            println!(
                "rho={rho} mu={mu} n={n}: prod/S = {worst_ratio:.2e}, matvec err = {worst_err:.2e}"
            );
        }
    }
}
