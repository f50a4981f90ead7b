//! Block-circulant preconditioners built from the frequency symbols.
//!
//! Two circulants matter: the one generated by the grid-level Schur symbol
//! (used inside the Schur correction solves) and the one generated by the
//! divergence-gradient product symbol (used inside the least-squares
//! commutator solves).  Both symbols vanish — or degenerate to a rank-one
//! block — at frequency zero, so each circulant gets a rank correction on
//! that single frequency block before it is ever factored.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;
use crate::structured::BlockCirculant;
use crate::symbols::{
    symbol_div_grad_product, symbol_div_grad_product_3d, symbol_schur_dx, symbol_schur_dx_3d,
    symbol_schur_limit, PhysicalParams,
};

use super::krylov::Preconditioner;

type Complex64 = Complex<f64>;

/// How a variable cross-section enters the circulant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthMode {
    /// Freeze the section at the first cell's sample.
    Constant,
    /// Use the mean section over all cells.
    Averaged,
    /// Build the circulant for a unit section and recover the local size
    /// through a diagonal sandwich of per-cell section scalings.
    DiagonalSampled,
}

/// A factored block circulant, optionally wrapped in a diagonal sandwich
/// `D^(1/2) C D^(1/2)` that carries the per-cell cross-section.  The apply
/// direction solves, so this is used as an (approximate) inverse.
pub struct CirculantPrecond {
    circ: BlockCirculant,
    /// `D^(-1/2)` of the sandwich, expanded to one entry per degree of
    /// freedom; `None` when no sandwich is used.
    half_inverse_scale: Option<DVector<f64>>,
}

impl CirculantPrecond {
    /// The underlying circulant (after rank corrections), mainly for
    /// spectral inspection in tests.
    pub fn circulant(&self) -> &BlockCirculant {
        &self.circ
    }

    pub fn dim(&self) -> usize {
        self.circ.dim()
    }

    fn new(circ: BlockCirculant, half_inverse_scale: Option<DVector<f64>>) -> Self {
        CirculantPrecond { circ, half_inverse_scale }
    }
}

impl Preconditioner for CirculantPrecond {
    fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.len() != self.circ.dim() {
            return Err(Error::DimensionMismatch(format!(
                "circulant preconditioner is {}-dimensional, vector has length {}",
                self.circ.dim(),
                r.len()
            )));
        }
        match &self.half_inverse_scale {
            None => self.circ.solve(r),
            Some(s) => {
                let scaled = r.component_mul(s);
                Ok(self.circ.solve(&scaled)?.component_mul(s))
            }
        }
    }
}

/// Per-dof scaling `section(j)^(-1/power2 over 2)`: each pressure cell
/// contributes `block` consecutive entries.
fn section_scaling(grid: &StaggeredGrid, block: usize, exponent: f64) -> DVector<f64> {
    DVector::from_fn(grid.n() * block, |i, _| grid.section(i / block).powf(exponent))
}

fn params_for_mode(grid: &StaggeredGrid, rho: f64, mu: f64, mode: WidthMode) -> Result<PhysicalParams> {
    match mode {
        WidthMode::Constant => PhysicalParams::new(grid.section(0), mu, rho, grid.c(), grid.dx()),
        WidthMode::Averaged => {
            PhysicalParams::new(grid.mean_section(), mu, rho, grid.c(), grid.dx())
        }
        WidthMode::DiagonalSampled => PhysicalParams::new(1.0, mu, rho, grid.c(), grid.dx()),
    }
}

/// All-ones rank correction for the zero-frequency block of the Schur
/// circulant.  The grid-level symbol at frequency zero is the rank-one
/// matrix `(d/c) [[-1, 1], [1, -1]]`; adding `1/(2n)^2` times the all-ones
/// matrix over all cells shifts only the zero-frequency block (by `1/(4n)`
/// times the all-ones 2x2 block) and restores invertibility there.
fn schur_rank_correction(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_element(2, 2, Complex64::new(1.0 / (4.0 * n as f64), 0.0))
}

/// Identity rank correction for the product circulant, whose symbol
/// vanishes entirely at frequency zero.  The shifted block is positive
/// definite, keeping the whole circulant compatible with conjugate
/// gradients.
fn product_rank_correction(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(2, 2) * Complex64::new(1.0 / (4.0 * n as f64), 0.0)
}

/// Circulant generated by the grid-level Schur symbol, rank-corrected at
/// frequency zero.  This is the workhorse preconditioner for the Schur
/// correction solves.
pub fn build_precond_cn(
    grid: &StaggeredGrid,
    rho: f64,
    mu: f64,
    mode: WidthMode,
) -> Result<CirculantPrecond> {
    let p = params_for_mode(grid, rho, mu, mode)?;
    let symbol =
        if grid.is_3d() { symbol_schur_dx_3d(&p)? } else { symbol_schur_dx(&p)? };
    let mut circ = BlockCirculant::from_symbol(&symbol, grid.n())?;
    circ.add_to_frequency_block(0, &schur_rank_correction(grid.n()))?;
    // The grid-level symbol is linear in the section, so the unit-section
    // circulant recovers the local size through a symmetric sandwich with
    // D = diag(section).
    let scale = match mode {
        WidthMode::DiagonalSampled => Some(section_scaling(grid, 2, -0.5)),
        _ => None,
    };
    Ok(CirculantPrecond::new(circ, scale))
}

/// Circulant generated by the vanishing-grid-spacing limit of the Schur
/// symbol.  The limit block at frequency zero is already invertible, so no
/// rank correction is applied.  Kept for comparison runs: the limit loses
/// the grid-dependent mass contribution and its effectiveness degrades
/// under refinement.
pub fn build_precond_cn_limit(grid: &StaggeredGrid, rho: f64, mu: f64) -> Result<CirculantPrecond> {
    let p = PhysicalParams::new(grid.mean_section(), mu, rho, grid.c(), grid.dx())?;
    let symbol = symbol_schur_limit(&p)?;
    let circ = BlockCirculant::from_symbol(&symbol, grid.n())?;
    Ok(CirculantPrecond::new(circ, None))
}

/// Circulant generated by the divergence-gradient product symbol,
/// rank-corrected at frequency zero so it is symmetric positive definite.
/// Preconditions the product solves of the least-squares commutator path.
pub fn build_precond_pn(
    grid: &StaggeredGrid,
    rho: f64,
    mu: f64,
    mode: WidthMode,
) -> Result<CirculantPrecond> {
    let p = params_for_mode(grid, rho, mu, mode)?;
    let symbol =
        if grid.is_3d() { symbol_div_grad_product_3d(&p)? } else { symbol_div_grad_product(&p)? };
    let mut circ = BlockCirculant::from_symbol(&symbol, grid.n())?;
    circ.add_to_frequency_block(0, &product_rank_correction(grid.n()))?;
    // The product symbol is quadratic in the section: sandwich with a full
    // inverse power on each side.
    let scale = match mode {
        WidthMode::DiagonalSampled => Some(section_scaling(grid, 2, -1.0)),
        _ => None,
    };
    Ok(CirculantPrecond::new(circ, scale))
}
