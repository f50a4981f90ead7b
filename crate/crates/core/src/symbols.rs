//! Closed-form frequency symbols of the interior operator stencils.
//!
//! On a constant-section grid every assembled operator is block Toeplitz
//! away from its boundary rows: block `(j, k)` depends only on `j - k`.
//! This module evaluates the generating symbols of those block families in
//! closed form for the production bases — axial degree 1 with the cubic
//! transverse profile in 2D, and one quadratic interior node per transverse
//! direction in 3D.  The symbols drive the spectral comparisons and the
//! circulant preconditioners.
//!
//! Conventions baked into the formulas:
//!
//! - the viscous face penalty sits at 1, where the axial face terms
//!   collapse to the classical three-point second difference;
//! - the symbols describe the scaled saddle blocks `N`, `(1/dt) G`, `D`,
//!   `(1/dx) E`, with `dt = c dx`;
//! - the viscous symbol keeps the axial stencil only.  The
//!   transverse-gradient part of `N` has entries of size
//!   `mu c dx^2 / section` and vanishes under refinement, while the mass
//!   enters [`symbol_momentum`] through an explicit `dx`-proportional term
//!   because the derived Schur symbol wants it at finite mesh width.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;
use crate::structured::{complex_matrix_eigenvalues, BlockSymbol};

/// Constant coefficients a symbol depends on: the fluid constants, the
/// cross-section of the reference geometry, and the mesh pair `(dx, c)`
/// with `dt = c dx` held fixed under refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Duct width (2D) or cross-sectional area (3D).
    pub section: f64,
    /// Dynamic viscosity.
    pub mu: f64,
    /// Density.
    pub rho: f64,
    /// Time-step ratio `dt / dx`.
    pub c: f64,
    /// Axial mesh width.
    pub dx: f64,
}

impl PhysicalParams {
    pub fn new(section: f64, mu: f64, rho: f64, c: f64, dx: f64) -> Result<Self> {
        let p = PhysicalParams { section, mu, rho, c, dx };
        p.validate()?;
        Ok(p)
    }

    /// All five constants must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("section", self.section),
            ("mu", self.mu),
            ("rho", self.rho),
            ("c", self.c),
            ("dx", self.dx),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.c * self.dx
    }

    /// Parameters matching `grid`, with its mean cross-section: exact for
    /// constant-section grids, a spatial average otherwise.
    pub fn for_grid(grid: &StaggeredGrid, rho: f64, mu: f64) -> Self {
        PhysicalParams {
            section: grid.mean_section(),
            mu,
            rho,
            c: grid.c(),
            dx: grid.dx(),
        }
    }
}

fn mat2(entries: [f64; 4]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &entries)
}

/// Gram matrix of the two retained cubic transverse nodes on the reference
/// interval, common factor pulled out: the reference transverse mass block
/// is `(27/70) * 2 * X`.
fn x_matrix() -> DMatrix<f64> {
    mat2([0.5, -1.0 / 16.0, -1.0 / 16.0, 0.5])
}

/// Coupling pattern of the interior gradient blocks: rows axial-major over
/// (axial node, transverse node) of the velocity cell, columns over the two
/// pressure nodes.
fn coupling_pattern() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 2, &[3.0, 1.0, 3.0, 1.0, 1.0, 3.0, 1.0, 3.0])
}

/// `P^T P / 4` for the coupling pattern `P`: the symmetric factor every
/// divergence-times-gradient product reduces to.
fn coupling_gram() -> DMatrix<f64> {
    mat2([5.0, 3.0, 3.0, 5.0])
}

/// Row-swapped partner of [`coupling_gram`], carrying the axial mass
/// coupling inside the finite-mesh Schur symbols.
fn coupling_gram_flipped() -> DMatrix<f64> {
    mat2([3.0, 5.0, 5.0, 3.0])
}

/// Symbol of the scaled viscous blocks:
/// `f_L(theta) = (27/70) section mu c (2 - 2 cos theta) I_2 (x) X`.
/// Eigenvalue branches `(27/70) section mu c (2 - 2 cos theta) (1/2 -+ 1/16)`,
/// each with multiplicity two.
pub fn symbol_laplacian(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let base = DMatrix::identity(2, 2).kronecker(&x_matrix());
    let k = 27.0 / 70.0 * p.section * p.mu * p.c;
    BlockSymbol::from_real_coefficients(
        4,
        4,
        [(0, &base * (2.0 * k)), (1, &base * -k), (-1, &base * -k)],
    )
}

/// Symbol of the mass blocks divided by `dx` (interior blocks are exactly
/// `dx` times this constant; the end cells halve):
/// `f_M = (9/70) section rho [[2,1],[1,2]] (x) X`.
pub fn symbol_mass(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let block =
        mat2([2.0, 1.0, 1.0, 2.0]).kronecker(&x_matrix()) * (9.0 / 70.0 * p.section * p.rho);
    BlockSymbol::from_real_coefficients(4, 4, [(0, block)])
}

/// Symbol of the momentum blocks `N = rho M + L` at mesh width `dx`:
///
/// `f_N = f_L + dx f_M
///      = (9/70) section [[a, dx rho], [dx rho, a]] (x) X`
///
/// with `a(theta) = 6 (1 - cos theta) mu c + 2 dx rho`.  Unlike the pure
/// viscous limit this keeps the mesh-proportional mass term; the
/// transverse-gradient part of `N` is dropped as a mesh-vanishing
/// correction (see the module docs).
pub fn symbol_momentum(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let x = x_matrix();
    let s = 9.0 / 70.0 * p.section;
    let diag = 6.0 * p.mu * p.c + 2.0 * p.dx * p.rho;
    let t0 = mat2([diag, p.dx * p.rho, p.dx * p.rho, diag]).kronecker(&x) * s;
    let off = mat2([-3.0 * p.mu * p.c, 0.0, 0.0, -3.0 * p.mu * p.c]).kronecker(&x) * s;
    BlockSymbol::from_real_coefficients(4, 4, [(0, t0), (1, off.clone()), (-1, off)])
}

/// Symbol of the scaled gradient `(1/dt) G`: coefficients
/// `t_0 = (3/64) section P` and `t_1 = -t_0` (interior blocks sit on the
/// main and first lower block diagonal), so
/// `g(theta) = -i (3/32) section P e^{i theta / 2} sin(theta / 2)`.
pub fn symbol_gradient(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let t0 = coupling_pattern() * (3.0 / 64.0 * p.section);
    BlockSymbol::from_real_coefficients(4, 2, [(0, t0.clone()), (1, -t0)])
}

/// Symbol of the divergence blocks: the adjoint of [`symbol_gradient`],
/// `t_0 = (3/64) section P^T`, `t_{-1} = -t_0`.
pub fn symbol_divergence(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let t0 = coupling_pattern().transpose() * (3.0 / 64.0 * p.section);
    BlockSymbol::from_real_coefficients(2, 4, [(0, t0.clone()), (-1, -t0)])
}

/// Symbol of the scaled pressure penalty `(1/dx) E`:
/// `e(theta) = section [[-1, e^{i theta}], [e^{-i theta}, -1]]`, with
/// eigenvalues `0` and `-2 section` at every frequency.
pub fn symbol_penalty(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let d = p.section;
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [
            (0, mat2([-d, 0.0, 0.0, -d])),
            (1, mat2([0.0, d, 0.0, 0.0])),
            (-1, mat2([0.0, 0.0, d, 0.0])),
        ],
    )
}

/// Symbol of the product `D * (1/dt) G`: the phases collapse into
/// `(3 section / 32)^2 (2 - 2 cos theta) [[5,3],[3,5]]`.
pub fn symbol_div_grad_product(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let unit = coupling_gram() * (3.0 / 32.0 * p.section).powi(2);
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [(0, &unit * 2.0), (1, -unit.clone()), (-1, -unit)],
    )
}

fn laplacian_inverse_value(p: &PhysicalParams, theta: f64) -> DMatrix<Complex64> {
    let b = 560.0 / (1701.0 * p.section * p.mu * p.c);
    let block = DMatrix::identity(2, 2).kronecker(&mat2([8.0, 1.0, 1.0, 8.0]));
    (block * (b / (1.0 - theta.cos()))).map(|v| Complex64::new(v, 0.0))
}

/// Pointwise inverse of the viscous symbol,
/// `f_L^{-1}(theta) = b / (1 - cos theta) * I_2 (x) [[8,1],[1,8]]` with
/// `b = 560 / (1701 section mu c)`; eigenvalue branches `9b / (1 - cos)`
/// and `7b / (1 - cos)`, each twice.  The symbol has a pole at frequency
/// zero — the returned evaluator produces non-finite entries there, while
/// [`laplacian_inverse_at`] reports the pole as an error.
pub fn symbol_laplacian_inverse(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let q = *p;
    Ok(BlockSymbol::from_fn(4, 4, move |theta| {
        laplacian_inverse_value(&q, theta)
    }))
}

/// Checked evaluation of the inverse viscous symbol.
pub fn laplacian_inverse_at(p: &PhysicalParams, theta: f64) -> Result<DMatrix<Complex64>> {
    p.validate()?;
    if (1.0 - theta.cos()).abs() < 1e-14 {
        return Err(Error::SymbolPole { theta });
    }
    Ok(laplacian_inverse_value(p, theta))
}

/// Mesh-free limit of the pressure Schur-complement symbol
/// `s = (1/c) e - d f_L^{-1} g`.  The `(1 - cos)` factors cancel exactly,
/// leaving
///
/// `s(theta) = (section / c) [[-1 - 5w, e^{i theta} - 3w],
///                            [e^{-i theta} - 3w, -1 - 5w]]`
///
/// with `w = (105/2016) / mu`, and eigenvalue branches
/// `(section / c) (-1 - 5w -+ sqrt(1 + 9 w^2 - 6 w cos theta))`.
pub fn symbol_schur_limit(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let w = 105.0 / 2016.0 / p.mu;
    let s = p.section / p.c;
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [
            (0, mat2([-1.0 - 5.0 * w, -3.0 * w, -3.0 * w, -1.0 - 5.0 * w]) * s),
            (1, mat2([0.0, s, 0.0, 0.0])),
            (-1, mat2([0.0, 0.0, s, 0.0])),
        ],
    )
}

fn schur_dx_value(p: &PhysicalParams, theta: f64, weight: f64) -> DMatrix<Complex64> {
    let cos = theta.cos();
    let a = 6.0 * (1.0 - cos) * p.mu * p.c + 2.0 * p.dx * p.rho;
    let b = p.dx * p.rho;
    // a >= 2 dx rho > b, so the denominator stays positive at every theta.
    let w = weight * p.section * (1.0 - cos) / (a * a - b * b);
    let correction = (coupling_gram() * a - coupling_gram_flipped() * b) * w;
    let mut out = correction.map(|v| Complex64::new(-v, 0.0));
    let s = p.section / p.c;
    out[(0, 0)] -= Complex64::new(s, 0.0);
    out[(1, 1)] -= Complex64::new(s, 0.0);
    out[(0, 1)] += Complex64::from_polar(s, theta);
    out[(1, 0)] += Complex64::from_polar(s, -theta);
    out
}

/// Finite-mesh Schur-complement symbol `(1/c) e - d f_N^{-1} g`, keeping
/// the mesh-proportional mass inside the momentum inverse:
///
/// `s_dx(theta) = (section / c) [[-1, e^{i theta}], [e^{-i theta}, -1]]
///    - (5/16) section (1 - cos theta) / (a^2 - (dx rho)^2)
///      * (a [[5,3],[3,5]] - dx rho [[3,5],[5,3]])`
///
/// with `a(theta) = 6 (1 - cos theta) mu c + 2 dx rho`.  At frequency zero
/// the correction vanishes and the symbol degenerates to rank one
/// (eigenvalues `0` and `-2 section / c`) — the circulant preconditioner
/// built on it therefore needs a rank correction at its zero frequency.
/// For `theta != 0` it converges entrywise to [`symbol_schur_limit`] as
/// `dx -> 0`; the limit is not uniform in `theta`.
pub fn symbol_schur_dx(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let q = *p;
    Ok(BlockSymbol::from_fn(2, 2, move |theta| {
        schur_dx_value(&q, theta, 5.0 / 16.0)
    }))
}

/// 3D momentum symbol for the quadratic transverse basis (one interior
/// node per direction, two velocity unknowns per cell):
/// `f_N = (32/675) area [[a, dx rho], [dx rho, a]]` with the same
/// `a(theta) = 6 (1 - cos theta) mu c + 2 dx rho` as in 2D.
pub fn symbol_momentum_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let s = 32.0 / 675.0 * p.section;
    let diag = 6.0 * p.mu * p.c + 2.0 * p.dx * p.rho;
    let off = mat2([-3.0 * p.mu * p.c, 0.0, 0.0, -3.0 * p.mu * p.c]) * s;
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [
            (0, mat2([diag, p.dx * p.rho, p.dx * p.rho, diag]) * s),
            (1, off.clone()),
            (-1, off),
        ],
    )
}

/// 3D scaled-gradient symbol: `t_0 = (area / 18) [[3,1],[1,3]]`,
/// `t_1 = -t_0`.
pub fn symbol_gradient_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let t0 = mat2([3.0, 1.0, 1.0, 3.0]) * (p.section / 18.0);
    BlockSymbol::from_real_coefficients(2, 2, [(0, t0.clone()), (1, -t0)])
}

/// 3D divergence symbol: the adjoint of [`symbol_gradient_3d`].
pub fn symbol_divergence_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let t0 = mat2([3.0, 1.0, 1.0, 3.0]) * (p.section / 18.0);
    BlockSymbol::from_real_coefficients(2, 2, [(0, t0.clone()), (-1, -t0)])
}

/// 3D scaled-penalty symbol: same structure as [`symbol_penalty`] with the
/// cross-sectional area in place of the width.
pub fn symbol_penalty_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let a = p.section;
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [
            (0, mat2([-a, 0.0, 0.0, -a])),
            (1, mat2([0.0, a, 0.0, 0.0])),
            (-1, mat2([0.0, 0.0, a, 0.0])),
        ],
    )
}

/// 3D product symbol `D * (1/dt) G`:
/// `(area / 18)^2 (2 - 2 cos theta) * 2 [[5,3],[3,5]]`.
pub fn symbol_div_grad_product_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let unit = coupling_gram() * (2.0 * (p.section / 18.0).powi(2));
    BlockSymbol::from_real_coefficients(
        2,
        2,
        [(0, &unit * 2.0), (1, -unit.clone()), (-1, -unit)],
    )
}

/// 3D finite-mesh Schur symbol: identical to [`symbol_schur_dx`] but with
/// the coupling weight `25/96` of the quadratic transverse basis and the
/// cross-sectional area in place of the width.
pub fn symbol_schur_dx_3d(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let q = *p;
    Ok(BlockSymbol::from_fn(2, 2, move |theta| {
        schur_dx_value(&q, theta, 25.0 / 96.0)
    }))
}

/// Frequency symbol of the whole column-scaled saddle matrix in the
/// refinement limit:
///
/// `F = [[f_L, g], [g^H, (1/c) e]]`,
///
/// Hermitian at every frequency.  Two of its six eigenvalue branches
/// coincide exactly: the transverse-odd velocity modes `w (x) (1, -1)` are
/// annihilated by the divergence symbol and see only the viscous part,
/// giving the double branch `(27/70) section mu c (2 - 2 cos theta) * 9/16`.
pub fn symbol_full_system(p: &PhysicalParams) -> Result<BlockSymbol> {
    p.validate()?;
    let lap = symbol_laplacian(p)?;
    let grad = symbol_gradient(p)?;
    let div = symbol_divergence(p)?;
    let pen = symbol_penalty(p)?;
    let inv_c = Complex64::new(1.0 / p.c, 0.0);
    let mut coeffs = Vec::new();
    for k in -1i64..=1 {
        let mut t = DMatrix::<Complex64>::zeros(6, 6);
        let part = |sym: &BlockSymbol| sym.coefficient(k).expect("stored coefficients");
        t.view_mut((0, 0), (4, 4)).copy_from(&part(&lap));
        t.view_mut((0, 4), (4, 2)).copy_from(&part(&grad));
        t.view_mut((4, 0), (2, 4)).copy_from(&part(&div));
        t.view_mut((4, 4), (2, 2)).copy_from(&(part(&pen) * inv_c));
        coeffs.push((k, t));
    }
    BlockSymbol::from_coefficients(6, 6, coeffs)
}

/// Which spectral quantity [`sample_branches`] extracts per frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    Eigenvalues,
    SingularValues,
}

/// Equispaced sampling grid `theta_j = j pi / (points - 1)` on `[0, pi]`;
/// every symbol here is even in `theta`, so the half period carries all of
/// the information.
pub fn sample_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!(
            "branch sampling needs at least two points, got {points}"
        )));
    }
    Ok((0..points)
        .map(|j| PI * j as f64 / (points - 1) as f64)
        .collect())
}

/// Samples the eigenvalue (or singular-value) branches of `symbol` on
/// [`sample_grid`]: entry `[b][j]` is the `b`-th smallest value at
/// `theta_j`.  Eigenvalues are reported by real part — exact for the
/// Hermitian symbols this is meant for; pair with sorted matrix spectra
/// when comparing against assembled operators.
pub fn sample_branches(
    symbol: &BlockSymbol,
    points: usize,
    kind: BranchKind,
) -> Result<Vec<Vec<f64>>> {
    let grid = sample_grid(points)?;
    let count = match kind {
        BranchKind::Eigenvalues => {
            if !symbol.is_square() {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalue branches need a square symbol, got {}x{} blocks",
                    symbol.nrows(),
                    symbol.ncols()
                )));
            }
            symbol.nrows()
        }
        BranchKind::SingularValues => symbol.nrows().min(symbol.ncols()),
    };
    let mut out = vec![vec![0.0; grid.len()]; count];
    for (j, &theta) in grid.iter().enumerate() {
        let m = symbol.eval(theta);
        let mut vals = match kind {
            BranchKind::Eigenvalues => complex_matrix_eigenvalues(&m)?
                .iter()
                .map(|z| z.re)
                .collect::<Vec<_>>(),
            BranchKind::SingularValues => singular_values(&m),
        };
        vals.sort_by(f64::total_cmp);
        for (b, v) in vals.into_iter().enumerate() {
            out[b][j] = v;
        }
    }
    Ok(out)
}

/// Singular values of a small dense complex matrix, unsorted.
fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone()
        .svd_unordered(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}
