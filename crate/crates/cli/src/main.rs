//! `pipeflow` — spectra, solver tables, simulations, and benchmarks for
//! the staggered DG pipe-flow discretization.
//!
//! Configuration is resolved in three layers: built-in defaults, an
//! optional `--config` JSON file, then command-line flags; the resolved
//! form is written to `<out>/config.json` so any run can be replayed with
//! `--config` alone.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Geometry, PrecondChoice, RunConfig};
use pipeflow_core::Result;

#[derive(Parser)]
#[command(name = "pipeflow", version, about = "Staggered DG pipe flow: spectra and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export sorted spectra of a named operator against its symbol samples.
    Spectrum {
        /// Operator to analyze: L, M, N, G, D, E, product, schur, or A.
        #[arg(long)]
        matrix: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve one linear system per grid size and tabulate iteration counts.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run implicit time steps and record the nonlinear sweep counts.
    Simulate {
        /// Number of time steps.
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Repeat solves and report median wall times per grid size.
    Bench {
        /// Timed repetitions per grid size (after one warmup).
        #[arg(long)]
        repeats: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Grid sizes, comma separated (e.g. 40,80,160).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Axial polynomial degree (the discretization fixes 1).
    #[arg(long)]
    nx: Option<usize>,
    /// Transverse polynomial degree.
    #[arg(long)]
    ny: Option<usize>,
    /// Second transverse degree; setting it makes the run 3D.
    #[arg(long)]
    nz: Option<usize>,
    /// pipe, nozzle2d, nozzle3d, or custom:<path>.
    #[arg(long)]
    geometry: Option<Geometry>,
    /// Schur preconditioner choice.
    #[arg(long, value_enum)]
    precond: Option<PrecondChoice>,
    /// Density [kg/m^3].
    #[arg(long)]
    rho: Option<f64>,
    /// Dynamic viscosity [Pa s].
    #[arg(long)]
    mu: Option<f64>,
    /// Time-step ratio dt/dx.
    #[arg(long)]
    c: Option<f64>,
    /// Duct length [m].
    #[arg(long)]
    length: Option<f64>,
    /// Inlet flow rate.
    #[arg(long)]
    flow_rate: Option<f64>,
    /// Interior penalty weight.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Outer (flexible GMRES) relative tolerance.
    #[arg(long)]
    tol_outer: Option<f64>,
    /// Schur-level relative tolerance.
    #[arg(long)]
    tol_schur: Option<f64>,
    /// Momentum-solve relative tolerance.
    #[arg(long)]
    tol_n: Option<f64>,
    /// Product-solve (commutator path) relative tolerance.
    #[arg(long)]
    tol_dg: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file applied underneath the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also export the assembled system blocks as MatrixMarket files.
    #[arg(long)]
    dump_matrices: bool,
}

impl CommonArgs {
    /// Defaults, overlaid by the config file, overlaid by the flags.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => pipeflow_core::io::read_json::<RunConfig>(path)?,
            None => RunConfig::default(),
        };
        if let Some(n) = &self.n {
            cfg.n = n.clone();
        }
        if let Some(nx) = self.nx {
            cfg.nx = nx;
        }
        if let Some(ny) = self.ny {
            cfg.ny = ny;
        }
        if let Some(nz) = self.nz {
            cfg.nz = Some(nz);
        }
        if let Some(g) = &self.geometry {
            cfg.geometry = g.clone();
        }
        if let Some(p) = self.precond {
            cfg.precond = p;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.length {
            cfg.length = v;
        }
        if let Some(v) = self.flow_rate {
            cfg.flow_rate = v;
        }
        if let Some(v) = self.alpha0 {
            cfg.alpha0 = v;
        }
        if let Some(v) = self.tol_outer {
            cfg.tol_outer = v;
        }
        if let Some(v) = self.tol_schur {
            cfg.tol_schur = v;
        }
        if let Some(v) = self.tol_n {
            cfg.tol_n = v;
        }
        if let Some(v) = self.tol_dg {
            cfg.tol_dg = v;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.dump_matrices {
            cfg.dump_matrices = true;
        }
        Ok(cfg)
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Spectrum { matrix, common } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            commands::cmd_spectrum(&cfg, matrix)
        }
        Command::Solve { common } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            commands::cmd_solve(&cfg)
        }
        Command::Simulate { steps, common } => {
            let mut cfg = common.resolve()?;
            if let Some(s) = steps {
                cfg.steps = *s;
            }
            cfg.validate()?;
            commands::cmd_simulate(&cfg)
        }
        Command::Bench { repeats, common } => {
            let mut cfg = common.resolve()?;
            if let Some(r) = repeats {
                cfg.repeats = *r;
            }
            cfg.validate()?;
            commands::cmd_bench(&cfg)
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
