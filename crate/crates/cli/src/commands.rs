//! The four subcommands: spectrum export, linear-solve tables, nonlinear
//! simulation, and timing sweeps.  Everything here is deterministic — no
//! seeds, no randomness — so repeated runs regenerate identical files.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use pipeflow_core::assembly::{
    apply_boundary_conditions, assemble_saddle_system, convective_rhs, inlet_nodal_values,
    ParabolicInlet, SaddleSystem,
};
use pipeflow_core::grid::{build_staggered_grid, build_staggered_grid_3d, StaggeredGrid};
use pipeflow_core::io::{write_json, write_matrix_market, write_spectrum_report, write_vector_csv};
use pipeflow_core::solvers::{picard_timestep, solve_saddle, SolverReport};
use pipeflow_core::spectral::{
    matrix_spectrum, schur_complement, SchurComplement, SchurMode, SpectrumReport,
};
use pipeflow_core::structured::BlockSymbol;
use pipeflow_core::symbols::{
    sample_branches, symbol_div_grad_product, symbol_div_grad_product_3d, symbol_divergence,
    symbol_divergence_3d, symbol_full_system, symbol_gradient, symbol_gradient_3d,
    symbol_laplacian, symbol_mass, symbol_momentum, symbol_momentum_3d, symbol_penalty,
    symbol_penalty_3d, symbol_schur_dx, symbol_schur_dx_3d, BranchKind, PhysicalParams,
};
use pipeflow_core::{Error, Result};

use crate::config::RunConfig;

/// Creates the output directory and records the canonical configuration in
/// it; every subcommand starts here.
pub fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    write_json(cfg.out.join("config.json"), cfg)
}

fn build_grid(cfg: &RunConfig, n: usize) -> Result<StaggeredGrid> {
    let (width, height) = cfg.geometry.profiles(cfg.length, cfg.is_3d())?;
    match height {
        Some(h) => build_staggered_grid_3d(
            n,
            cfg.length,
            |x| width.eval(x),
            |x| h.eval(x),
            cfg.c,
        ),
        None => build_staggered_grid(n, cfg.length, |x| width.eval(x), cfg.c),
    }
}

fn assemble_raw(cfg: &RunConfig, n: usize) -> Result<SaddleSystem> {
    let grid = build_grid(cfg, n)?;
    assemble_saddle_system(&grid, cfg.nx, cfg.ny, cfg.nz, cfg.rho, cfg.mu, cfg.alpha0)
}

fn assemble_closed(cfg: &RunConfig, n: usize) -> Result<(SaddleSystem, ParabolicInlet)> {
    let mut sys = assemble_raw(cfg, n)?;
    let inlet = ParabolicInlet::for_grid(&sys.grid, cfg.flow_rate);
    apply_boundary_conditions(&mut sys, &inlet, 0.0)?;
    Ok((sys, inlet))
}

/// The inlet profile replicated into every dual cell — the start state of
/// every simulation and the linearization point of the solve tables.
fn developed_state(sys: &SaddleSystem, inlet: &ParabolicInlet) -> DVector<f64> {
    let nodal = inlet_nodal_values(&sys.vel_basis, inlet);
    let s = sys.vel_basis.count();
    let mut state = DVector::zeros(sys.n_velocity());
    for i in 0..=sys.grid.n() {
        state.rows_mut(i * s, s).copy_from(&nodal);
    }
    state
}

/// Right-hand side of the first Picard sweep from the developed state:
/// previous-step mass plus frozen convection, boundary rows overwritten.
fn first_sweep_rhs(sys: &SaddleSystem, inlet: &ParabolicInlet) -> Result<DVector<f64>> {
    let state = developed_state(sys, inlet);
    let mut rhs_u =
        sys.mass.matvec(&state) + convective_rhs(&sys.grid, &sys.vel_basis, &state, sys.rho, inlet)?;
    let mut rhs_p = DVector::zeros(sys.n_pressure());
    sys.apply_bc_to_rhs(&mut rhs_u, &mut rhs_p);
    let mut rhs = DVector::zeros(sys.total_dim());
    rhs.rows_mut(0, sys.n_velocity()).copy_from(&rhs_u);
    rhs.rows_mut(sys.n_velocity(), sys.n_pressure()).copy_from(&rhs_p);
    Ok(rhs)
}

fn dump_system_matrices(cfg: &RunConfig, sys: &SaddleSystem, n: usize) -> Result<()> {
    for (label, block) in [
        ("mass", &sys.mass),
        ("momentum", &sys.momentum),
        ("gradient", &sys.gradient),
        ("divergence", &sys.divergence),
        ("penalty", &sys.penalty),
    ] {
        write_matrix_market(cfg.out.join(format!("{label}-n{n}.mtx")), &block.to_csr())?;
    }
    Ok(())
}

/// Plain fixed-width table; headers and rows share column widths.
fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: Vec<String>, widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:>w$}", w = w))
            .collect::<Vec<_>>()
            .join("  ")
    };
    out.push_str(&fmt_row(headers.iter().map(|h| h.to_string()).collect(), &widths));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.clone(), &widths));
        out.push('\n');
    }
    out
}

fn iteration_range(report: &SolverReport, level: &str) -> String {
    match report.inner_levels.iter().find(|l| l.level == level) {
        Some(l) if l.min_iterations == l.max_iterations => format!("{}", l.max_iterations),
        Some(l) => format!("{}-{}", l.min_iterations, l.max_iterations),
        None => "-".into(),
    }
}

// --- spectrum ---------------------------------------------------------------

/// Which named operator `spectrum` extracts, with its matrix realization
/// and matching symbol.
struct SpectrumTarget {
    matrix: DMatrix<f64>,
    symbol: BlockSymbol,
    kind: BranchKind,
}

const MATRIX_NAMES: &str = "L, M, N, G, D, E, product, schur, A";

fn spectrum_target(cfg: &RunConfig, name: &str, n: usize) -> Result<SpectrumTarget> {
    let three_d = cfg.is_3d();
    let sys = assemble_raw(cfg, n)?;
    let p = PhysicalParams::for_grid(&sys.grid, cfg.rho, cfg.mu);
    let dt = sys.grid.dt();
    let only_2d = |sym: Result<BlockSymbol>| {
        if three_d {
            Err(Error::InvalidArgument(format!(
                "matrix {name} has no 3D symbol; available in 3D: N, G, D, E, product, schur"
            )))
        } else {
            sym
        }
    };
    let (matrix, symbol, kind) = match name {
        "L" => (
            sys.momentum.to_dense() - sys.mass.to_dense(),
            only_2d(symbol_laplacian(&p))?,
            BranchKind::Eigenvalues,
        ),
        "M" => (sys.mass.to_dense(), only_2d(symbol_mass(&p))?, BranchKind::Eigenvalues),
        "N" => (
            sys.momentum.to_dense(),
            if three_d { symbol_momentum_3d(&p)? } else { symbol_momentum(&p)? },
            BranchKind::Eigenvalues,
        ),
        "G" => (
            sys.gradient.to_dense() / dt,
            if three_d { symbol_gradient_3d(&p)? } else { symbol_gradient(&p)? },
            BranchKind::SingularValues,
        ),
        "D" => (
            sys.divergence.to_dense(),
            if three_d { symbol_divergence_3d(&p)? } else { symbol_divergence(&p)? },
            BranchKind::SingularValues,
        ),
        "E" => (
            sys.penalty.to_dense() / sys.grid.dx(),
            if three_d { symbol_penalty_3d(&p)? } else { symbol_penalty(&p)? },
            BranchKind::Eigenvalues,
        ),
        "product" => (
            sys.divergence.to_dense() * (sys.gradient.to_dense() / dt),
            if three_d { symbol_div_grad_product_3d(&p)? } else { symbol_div_grad_product(&p)? },
            BranchKind::Eigenvalues,
        ),
        "schur" => {
            let (closed, _) = assemble_closed(cfg, n)?;
            let SchurComplement::Dense(s) = schur_complement(&closed, SchurMode::ExactDense)?
            else {
                unreachable!("asked for the dense form");
            };
            (s, if three_d { symbol_schur_dx_3d(&p)? } else { symbol_schur_dx(&p)? }, BranchKind::Eigenvalues)
        }
        "A" => {
            let (closed, _) = assemble_closed(cfg, n)?;
            (closed.scaled_dense(), only_2d(symbol_full_system(&p))?, BranchKind::Eigenvalues)
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown matrix {name:?}; expected one of {MATRIX_NAMES}"
            )))
        }
    };
    Ok(SpectrumTarget { matrix, symbol, kind })
}

#[derive(Serialize)]
struct SpectrumSummaryRow {
    n: usize,
    sup_discrepancy: f64,
    mean_discrepancy: f64,
    csv: PathBuf,
}

pub fn cmd_spectrum(cfg: &RunConfig, matrix: &str) -> Result<()> {
    prepare_out_dir(cfg)?;
    let mut summary = Vec::new();
    for &n in &cfg.n {
        let target = spectrum_target(cfg, matrix, n)?;
        let values = matrix_spectrum(&target.matrix, target.kind)?;
        let points = n.max(128);
        let branches = sample_branches(&target.symbol, points, target.kind)?;
        let p = PhysicalParams::for_grid(&build_grid(cfg, n)?, cfg.rho, cfg.mu);
        let report = SpectrumReport::new(matrix, n, p, values, &branches)?;
        let csv = cfg.out.join(format!("spectrum-{matrix}-n{n}.csv"));
        write_spectrum_report(&csv, &report)?;
        println!(
            "{matrix}  n={n:>4}  sup discrepancy {:.3e}  mean {:.3e}  -> {}",
            report.sup_discrepancy,
            report.mean_discrepancy,
            csv.display()
        );
        summary.push(SpectrumSummaryRow {
            n,
            sup_discrepancy: report.sup_discrepancy,
            mean_discrepancy: report.mean_discrepancy,
            csv,
        });
        if cfg.dump_matrices {
            let sys = assemble_raw(cfg, n)?;
            dump_system_matrices(cfg, &sys, n)?;
        }
    }
    write_json(cfg.out.join(format!("spectrum-{matrix}-summary.json")), &summary)?;
    Ok(())
}

// --- solve ------------------------------------------------------------------

#[derive(Serialize)]
struct SolveRow {
    n: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<SolverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    wall_time_secs: f64,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let lsc = matches!(cfg.precond, crate::config::PrecondChoice::Lsc);
    let solver_cfg = cfg.solver_config()?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &n in &cfg.n {
        let (sys, inlet) = assemble_closed(cfg, n)?;
        if cfg.dump_matrices {
            dump_system_matrices(cfg, &sys, n)?;
        }
        let rhs = first_sweep_rhs(&sys, &inlet)?;
        let started = Instant::now();
        let solved = solve_saddle(&sys, &rhs, cfg.precond.strategy(), &solver_cfg);
        let elapsed = started.elapsed().as_secs_f64();
        match solved {
            Ok((_, report)) => {
                let mut cells = vec![
                    n.to_string(),
                    report.outer.iterations.to_string(),
                    iteration_range(&report, "schur"),
                ];
                if lsc {
                    cells.push(iteration_range(&report, "product"));
                }
                cells.push(format!("{elapsed:.3}"));
                table.push(cells);
                rows.push(SolveRow {
                    n,
                    converged: true,
                    report: Some(report),
                    error: None,
                    wall_time_secs: elapsed,
                });
            }
            Err(e @ Error::NoConvergence { .. }) => {
                let mut cells = vec![n.to_string(), "-".into(), "no conv.".into()];
                if lsc {
                    cells.push("-".into());
                }
                cells.push(format!("{elapsed:.3}"));
                table.push(cells);
                rows.push(SolveRow {
                    n,
                    converged: false,
                    report: None,
                    error: Some(e.to_string()),
                    wall_time_secs: elapsed,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let headers: Vec<&str> = if lsc {
        vec!["n", "outer", "schur", "product", "time [s]"]
    } else {
        vec!["n", "outer", "schur", "time [s]"]
    };
    let text = render_table(&headers, &table);
    print!("{text}");
    std::fs::write(cfg.out.join("solve-table.txt"), &text)?;
    write_json(cfg.out.join("solve-report.json"), &rows)?;
    Ok(())
}

// --- simulate ---------------------------------------------------------------

#[derive(Serialize)]
struct SimulateRow {
    n: usize,
    steps: usize,
    picard_sweeps: Vec<usize>,
    velocity_csv: PathBuf,
    pressure_csv: PathBuf,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let solver_cfg = cfg.solver_config()?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &n in &cfg.n {
        let (sys, inlet) = assemble_closed(cfg, n)?;
        if cfg.dump_matrices {
            dump_system_matrices(cfg, &sys, n)?;
        }
        let mut state = developed_state(&sys, &inlet);
        let mut pressure = DVector::zeros(sys.n_pressure());
        let mut sweeps = Vec::with_capacity(cfg.steps);
        for _ in 0..cfg.steps {
            let out = picard_timestep(&sys, &inlet, &state, cfg.precond.strategy(), &solver_cfg)?;
            sweeps.push(out.picard_iterations);
            state = out.state;
            pressure = out.pressure;
        }
        let velocity_csv = cfg.out.join(format!("velocity-n{n}.csv"));
        let pressure_csv = cfg.out.join(format!("pressure-n{n}.csv"));
        write_vector_csv(&velocity_csv, &state)?;
        write_vector_csv(&pressure_csv, &pressure)?;
        table.push(vec![
            n.to_string(),
            sweeps.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        ]);
        rows.push(SimulateRow {
            n,
            steps: cfg.steps,
            picard_sweeps: sweeps,
            velocity_csv,
            pressure_csv,
        });
    }
    let text = render_table(&["n", "picard sweeps per step"], &table);
    print!("{text}");
    std::fs::write(cfg.out.join("simulate-table.txt"), &text)?;
    write_json(cfg.out.join("simulate-report.json"), &rows)?;
    Ok(())
}

// --- bench ------------------------------------------------------------------

#[derive(Serialize)]
struct BenchRow {
    n: usize,
    median_secs: f64,
    samples: Vec<f64>,
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    prepare_out_dir(cfg)?;
    let solver_cfg = cfg.solver_config()?;
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut table = Vec::new();
    for &n in &cfg.n {
        let (sys, inlet) = assemble_closed(cfg, n)?;
        let rhs = first_sweep_rhs(&sys, &inlet)?;
        // One warmup solve, then timed repeats; the warmup also surfaces
        // nonconvergence before any time is reported.
        solve_saddle(&sys, &rhs, cfg.precond.strategy(), &solver_cfg)?;
        let mut samples = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            let started = Instant::now();
            solve_saddle(&sys, &rhs, cfg.precond.strategy(), &solver_cfg)?;
            samples.push(started.elapsed().as_secs_f64());
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let ratio = rows
            .last()
            .map(|prev: &BenchRow| format!("{:.2}", median / prev.median_secs))
            .unwrap_or_else(|| "-".into());
        table.push(vec![n.to_string(), format!("{median:.4}"), ratio]);
        rows.push(BenchRow { n, median_secs: median, samples });
    }
    let text = render_table(&["n", "median [s]", "ratio"], &table);
    print!("{text}");
    std::fs::write(cfg.out.join("bench-table.txt"), &text)?;
    write_json(cfg.out.join("bench-report.json"), &rows)?;
    Ok(())
}
