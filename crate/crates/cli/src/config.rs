//! Run configuration: defaults, JSON round trip, command-line overrides,
//! and the cross-field checks that reject inconsistent runs before any
//! matrix is assembled.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use pipeflow_core::solvers::{SchurStrategy, SolverConfig, WidthMode};
use pipeflow_core::{Error, Result};

/// Cross-section profile of the duct.  The canonical text forms (`pipe`,
/// `nozzle2d`, `nozzle3d`, `custom:<path>`) double as the serde
/// representation, so a config file and the command line accept the same
/// spellings.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// Constant width 0.025 m (square section when a 3D run adds `nz`).
    Pipe,
    /// Linear taper 0.025 -> 0.0125 m over the duct length; 2D only.
    Nozzle2d,
    /// Width and height both taper 0.025 -> 0.0125 m, so the area shrinks
    /// 6.25e-4 -> 1.5625e-4 m^2; 3D only.
    Nozzle3d,
    /// Piecewise-linear width table from a CSV file of `x,width` rows
    /// (`x,width,height` for 3D).
    Custom(PathBuf),
}

impl Geometry {
    const REFERENCE_WIDTH: f64 = 0.025;

    /// Width samples at the primal cell centers, and height samples for 3D
    /// geometries.  The closures the grid builder wants are produced by
    /// [`crate::commands`] from these tables.
    pub fn profiles(&self, length: f64, three_d: bool) -> Result<(WidthTable, Option<WidthTable>)> {
        match self {
            Geometry::Pipe => {
                let w = WidthTable::constant(Self::REFERENCE_WIDTH);
                let h = three_d.then(|| WidthTable::constant(Self::REFERENCE_WIDTH));
                Ok((w, h))
            }
            Geometry::Nozzle2d => {
                Ok((WidthTable::taper(Self::REFERENCE_WIDTH, Self::REFERENCE_WIDTH / 2.0, length), None))
            }
            Geometry::Nozzle3d => {
                let t = WidthTable::taper(Self::REFERENCE_WIDTH, Self::REFERENCE_WIDTH / 2.0, length);
                Ok((t.clone(), Some(t)))
            }
            Geometry::Custom(path) => read_width_table(path, three_d),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Pipe => write!(f, "pipe"),
            Geometry::Nozzle2d => write!(f, "nozzle2d"),
            Geometry::Nozzle3d => write!(f, "nozzle3d"),
            Geometry::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pipe" => Ok(Geometry::Pipe),
            "nozzle2d" => Ok(Geometry::Nozzle2d),
            "nozzle3d" => Ok(Geometry::Nozzle3d),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(Geometry::Custom(PathBuf::from(path))),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown geometry {s:?}; expected pipe, nozzle2d, nozzle3d, or custom:<path>"
                ))),
            },
        }
    }
}

impl Serialize for Geometry {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Geometry {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sampled width (or height) profile with linear interpolation between the
/// sample abscissas and constant extension beyond them.
#[derive(Clone, Debug)]
pub enum WidthTable {
    Constant(f64),
    Sampled(Vec<(f64, f64)>),
}

impl WidthTable {
    fn constant(v: f64) -> Self {
        WidthTable::Constant(v)
    }

    fn taper(from: f64, to: f64, length: f64) -> Self {
        WidthTable::Sampled(vec![(0.0, from), (length, to)])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WidthTable::Constant(v) => *v,
            WidthTable::Sampled(rows) => {
                if x <= rows[0].0 {
                    return rows[0].1;
                }
                for pair in rows.windows(2) {
                    let (x0, v0) = pair[0];
                    let (x1, v1) = pair[1];
                    if x <= x1 {
                        let t = (x - x0) / (x1 - x0);
                        return v0 + t * (v1 - v0);
                    }
                }
                rows[rows.len() - 1].1
            }
        }
    }
}

fn read_width_table(path: &Path, three_d: bool) -> Result<(WidthTable, Option<WidthTable>)> {
    let text = std::fs::read_to_string(path)?;
    let mut widths = Vec::new();
    let mut heights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = if three_d { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{}:{}: expected {expected} comma-separated fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64> {
            f.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{}:{}: non-numeric field {f:?}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let x = parse(fields[0])?;
        widths.push((x, parse(fields[1])?));
        if three_d {
            heights.push((x, parse(fields[2])?));
        }
    }
    if widths.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} needs at least two sample rows",
            path.display()
        )));
    }
    if widths.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument(format!(
            "{} sample abscissas must be strictly increasing",
            path.display()
        )));
    }
    let h = three_d.then(|| WidthTable::Sampled(heights));
    Ok((WidthTable::Sampled(widths), h))
}

/// Which Schur-correction preconditioner the solver stack uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum PrecondChoice {
    /// Circulant of the grid-level Schur symbol, cross-section averaged.
    CirculantDx,
    /// Circulant of the vanishing-grid-spacing limit symbol.
    CirculantS,
    /// Grid-level circulant with per-cell diagonal section sampling.
    CirculantDiag,
    /// Least-squares commutator path.
    Lsc,
}

impl PrecondChoice {
    pub fn strategy(self) -> SchurStrategy {
        match self {
            PrecondChoice::CirculantDx => SchurStrategy::CirculantDx(WidthMode::Averaged),
            PrecondChoice::CirculantS => SchurStrategy::CirculantLimit,
            PrecondChoice::CirculantDiag => SchurStrategy::CirculantDx(WidthMode::DiagonalSampled),
            PrecondChoice::Lsc => SchurStrategy::Lsc(WidthMode::Averaged),
        }
    }
}

/// One fully resolved run: defaults overlaid by an optional config file,
/// overlaid by command-line flags.  The canonical JSON form written to the
/// output directory parses back into an identical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Vec<usize>,
    pub nx: usize,
    pub ny: usize,
    pub nz: Option<usize>,
    pub geometry: Geometry,
    pub rho: f64,
    pub mu: f64,
    /// Time-step ratio; `dt = c * dx`.
    pub c: f64,
    pub length: f64,
    pub flow_rate: f64,
    pub alpha0: f64,
    pub precond: PrecondChoice,
    pub tol_outer: f64,
    pub tol_schur: f64,
    pub tol_n: f64,
    pub tol_dg: f64,
    /// Time steps taken by `simulate`.
    pub steps: usize,
    /// Timed repetitions per size in `bench`.
    pub repeats: usize,
    pub out: PathBuf,
    pub dump_matrices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            n: vec![40],
            nx: 1,
            ny: 3,
            nz: None,
            geometry: Geometry::Pipe,
            rho: 1000.0,
            mu: 1e-3,
            c: 1.0,
            length: 1.0,
            flow_rate: 5e-6,
            alpha0: 1.0,
            precond: PrecondChoice::CirculantDx,
            tol_outer: solver.outer.tol,
            tol_schur: solver.schur.tol,
            tol_n: solver.momentum.tol,
            tol_dg: solver.product.tol,
            steps: 3,
            repeats: 3,
            out: PathBuf::from("out"),
            dump_matrices: false,
        }
    }
}

impl RunConfig {
    /// The solver stack's view of the tolerances.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        cfg.outer.tol = self.tol_outer;
        cfg.schur.tol = self.tol_schur;
        cfg.momentum.tol = self.tol_n;
        cfg.product.tol = self.tol_dg;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_3d(&self) -> bool {
        self.nz.is_some()
    }

    /// Cross-field consistency; geometry/dimension clashes and parameter
    /// ranges are rejected here, before anything is assembled.
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::InvalidArgument("need at least one grid size in --n".into()));
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("grid sizes must be at least 2".into()));
        }
        if self.nx != 1 {
            return Err(Error::InvalidArgument(
                "symbols and preconditioners are built for nx = 1; only the axial degree 1 is supported here".into(),
            ));
        }
        if self.ny < 1 {
            return Err(Error::InvalidArgument("ny must be at least 1".into()));
        }
        if self.nz == Some(0) {
            return Err(Error::InvalidArgument("nz must be at least 1 when given".into()));
        }
        match (&self.geometry, self.is_3d()) {
            (Geometry::Nozzle2d, true) => {
                return Err(Error::InvalidArgument(
                    "geometry nozzle2d is two-dimensional; drop --nz or use nozzle3d".into(),
                ))
            }
            (Geometry::Nozzle3d, false) => {
                return Err(Error::InvalidArgument(
                    "geometry nozzle3d needs a transverse degree --nz".into(),
                ))
            }
            _ => {}
        }
        for (name, v) in [
            ("rho", self.rho),
            ("mu", self.mu),
            ("c", self.c),
            ("length", self.length),
            ("flow-rate", self.flow_rate),
            ("alpha0", self.alpha0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.steps == 0 || self.repeats == 0 {
            return Err(Error::InvalidArgument("steps and repeats must be at least 1".into()));
        }
        self.solver_config().map(|_| ())
    }
}
