//! Assembly of the staggered DG operators.
//!
//! Velocities live on the dual cells (cell `i` centered on the grid point
//! `i * dx`, the two end cells half length), pressures on the primal cells.
//! Each dual cell is integrated piecewise over the primal cells it overlaps,
//! because the section data (width, and height in 3D) is sampled per primal
//! cell.  Transversally everything is computed on the reference square with
//! the section absorbed into the metric, which is what makes the scheme
//! quasi-one-dimensional: a function constant in the reference transverse
//! coordinate stays "the same profile" as the pipe narrows.
//!
//! Scaling conventions, chosen so the assembled saddle-point matrix matches
//! the momentum equation advanced by one implicit Euler step of size
//! `dt = c * dx`:
//!
//! * the viscous operator and the pressure gradient carry a factor `dt`,
//! * the mass matrix carries `rho` and no `dt`,
//! * the continuity rows are entered with a *negative* sign and no `dt`,
//!   which keeps the full matrix symmetric apart from boundary rows,
//! * the pressure jump penalty uses the mesh-dependent weight `dx` and the
//!   same negative sign as the continuity rows.

use nalgebra::{DMatrix, DVector};

use crate::basis::{
    assembly_rule_points, gauss_quadrature, lagrange_tensor_basis, BasisRole, Lagrange1d,
    QuadratureRule, TensorBasis,
};
use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;
use crate::sparse::BlockMatrix;

/// One axial piece of a dual cell: its overlap with a single primal cell.
struct Piece {
    primal: usize,
    x_lo: f64,
    x_hi: f64,
}

/// Overlaps of dual cell `i` with the primal cells, in axial order.  The end
/// cells sit entirely inside the first/last primal cell; interior dual cells
/// straddle one primal interface at their midpoint.
fn dual_pieces(grid: &StaggeredGrid, i: usize) -> Vec<Piece> {
    let (lo, hi) = grid.dual_span(i);
    let n = grid.n();
    if i == 0 {
        vec![Piece { primal: 0, x_lo: lo, x_hi: hi }]
    } else if i == n {
        vec![Piece { primal: n - 1, x_lo: lo, x_hi: hi }]
    } else {
        let mid = i as f64 * grid.dx();
        vec![
            Piece { primal: i - 1, x_lo: lo, x_hi: mid },
            Piece { primal: i, x_lo: mid, x_hi: hi },
        ]
    }
}

/// `integral of f over [lo, hi]` with a rule given on `[0, 1]`.
fn integrate(rule: &QuadratureRule, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let len = hi - lo;
    len * rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(lo + len * x))
        .sum::<f64>()
}

/// Reference-cell mass, stiffness, and weight integrals over the retained
/// transverse node functions, combined over both transverse directions in 3D
/// (`t = ty * (nz - 1) + tz` ordering, matching the basis).
struct TransTables {
    /// `m[t, t'] = integral of l_t l_t'` (times the z mass in 3D).
    mass: DMatrix<f64>,
    /// y-derivative stiffness (times the z mass in 3D).
    stiff_y: DMatrix<f64>,
    /// z-derivative stiffness (times the y mass); zero matrix in 2D.
    stiff_z: DMatrix<f64>,
    /// `w[t] = integral of l_t` over the reference section.
    weight: DVector<f64>,
}

fn line_tables(l: &Lagrange1d, active: &[usize]) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let rule = gauss_quadrature(assembly_rule_points(l.degree()))
        .expect("assembly rule size is positive");
    let m = active.len();
    let mass = DMatrix::from_fn(m, m, |a, b| {
        integrate(&rule, 0.0, 1.0, |y| l.eval(active[a], y) * l.eval(active[b], y))
    });
    let stiff = DMatrix::from_fn(m, m, |a, b| {
        integrate(&rule, 0.0, 1.0, |y| l.deriv(active[a], y) * l.deriv(active[b], y))
    });
    let weight = DVector::from_fn(m, |a, _| integrate(&rule, 0.0, 1.0, |y| l.eval(active[a], y)));
    (mass, stiff, weight)
}

fn transverse_tables(basis: &TensorBasis) -> TransTables {
    match basis.role() {
        BasisRole::Pressure => TransTables {
            mass: DMatrix::identity(1, 1),
            stiff_y: DMatrix::zeros(1, 1),
            stiff_z: DMatrix::zeros(1, 1),
            weight: DVector::from_element(1, 1.0),
        },
        BasisRole::Velocity => {
            let ly = basis.transverse_y().expect("velocity basis has a y factor");
            let (my, ky, wy) = line_tables(ly, basis.active_y());
            match basis.transverse_z() {
                None => TransTables {
                    stiff_z: DMatrix::zeros(my.nrows(), my.ncols()),
                    mass: my,
                    stiff_y: ky,
                    weight: wy,
                },
                Some(lz) => {
                    let (mz, kz, wz) = line_tables(lz, basis.active_z());
                    TransTables {
                        mass: my.kronecker(&mz),
                        stiff_y: ky.kronecker(&mz),
                        stiff_z: my.kronecker(&kz),
                        weight: wy.kronecker(&wz),
                    }
                }
            }
        }
    }
}

fn check_velocity_basis(grid: &StaggeredGrid, vel: &TensorBasis) -> Result<()> {
    if vel.role() != BasisRole::Velocity {
        return Err(Error::InvalidArgument("expected a velocity basis".into()));
    }
    if grid.is_3d() != vel.transverse_z().is_some() {
        return Err(Error::InvalidArgument(
            "grid and velocity basis disagree on 2D vs 3D".into(),
        ));
    }
    Ok(())
}

fn check_pressure_basis(press: &TensorBasis) -> Result<()> {
    if press.role() != BasisRole::Pressure {
        return Err(Error::InvalidArgument("expected a pressure basis".into()));
    }
    Ok(())
}

fn axial_rule(basis: &TensorBasis) -> QuadratureRule {
    gauss_quadrature(assembly_rule_points(basis.axial().degree()))
        .expect("assembly rule size is positive")
}

/// Viscous operator, interior-penalty form, scaled by `dt`.
///
/// Faces sit at the primal cell centers (the interfaces between dual cells).
/// The inlet and outlet ends get no face terms: the inlet rows are replaced
/// by the boundary conditions anyway, and leaving the outlet face free is
/// exactly the zero-traction outflow condition.
pub fn assemble_laplacian(
    grid: &StaggeredGrid,
    vel: &TensorBasis,
    mu: f64,
    alpha0: f64,
) -> Result<BlockMatrix> {
    check_velocity_basis(grid, vel)?;
    if mu <= 0.0 || alpha0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "viscosity and penalty weight must be positive (mu = {mu}, alpha0 = {alpha0})"
        )));
    }
    let n = grid.n();
    let dt = grid.dt();
    let dx = grid.dx();
    let t_count = vel.transverse_count();
    let na = vel.axial().node_count();
    let s = vel.count();
    let tables = transverse_tables(vel);
    let rule = axial_rule(vel);
    let ax = vel.axial();

    let mut lap = BlockMatrix::zeros(n + 1, n + 1, s, s);

    // Volume terms, piecewise over the primal cells.
    for i in 0..=n {
        let (lo, _) = grid.dual_span(i);
        let h = grid.dual_cell_length(i);
        let mut block = DMatrix::zeros(s, s);
        for piece in dual_pieces(grid, i) {
            let w = grid.width(piece.primal);
            let h3 = grid.height(piece.primal);
            // Axial-derivative term scales with the section; the transverse
            // gradients pick up the inverse metric of their direction.
            let sect = w * h3;
            let grad_trans = &tables.stiff_y * (h3 / w) + &tables.stiff_z * (w / h3);
            for a in 0..na {
                for a2 in 0..na {
                    let ider = integrate(&rule, piece.x_lo, piece.x_hi, |x| {
                        let xi = (x - lo) / h;
                        ax.deriv(a, xi) * ax.deriv(a2, xi)
                    }) / (h * h);
                    let imass = integrate(&rule, piece.x_lo, piece.x_hi, |x| {
                        let xi = (x - lo) / h;
                        ax.eval(a, xi) * ax.eval(a2, xi)
                    });
                    for t in 0..t_count {
                        for t2 in 0..t_count {
                            block[(a * t_count + t, a2 * t_count + t2)] += mu
                                * dt
                                * (ider * sect * tables.mass[(t, t2)]
                                    + imass * grad_trans[(t, t2)]);
                        }
                    }
                }
            }
        }
        lap.add_block(i, i, &block);
    }

    // Interior faces between consecutive dual cells, at the primal centers.
    for f in 0..n {
        let sect = grid.section(f);
        let h_left = grid.dual_cell_length(f);
        let h_right = grid.dual_cell_length(f + 1);
        // Traces and physical derivatives of the axial functions at the face,
        // per side (side 0 = left cell at xi = 1, side 1 = right at xi = 0).
        let trace = [
            (0..na).map(|a| ax.eval(a, 1.0)).collect::<Vec<_>>(),
            (0..na).map(|a| ax.eval(a, 0.0)).collect::<Vec<_>>(),
        ];
        let deriv = [
            (0..na).map(|a| ax.deriv(a, 1.0) / h_left).collect::<Vec<_>>(),
            (0..na).map(|a| ax.deriv(a, 0.0) / h_right).collect::<Vec<_>>(),
        ];
        let sign = [1.0, -1.0];
        let cell = [f, f + 1];
        for side_u in 0..2 {
            for side_v in 0..2 {
                let mut block = DMatrix::zeros(s, s);
                for p in 0..na {
                    for q in 0..na {
                        // Symmetric interior-penalty coupling of the jump and
                        // the averaged normal derivative, plus the penalty.
                        let coupling = -0.5 * deriv[side_u][q] * sign[side_v] * trace[side_v][p]
                            - 0.5 * deriv[side_v][p] * sign[side_u] * trace[side_u][q]
                            + (alpha0 / dx)
                                * sign[side_u]
                                * sign[side_v]
                                * trace[side_u][q]
                                * trace[side_v][p];
                        for t in 0..t_count {
                            for t2 in 0..t_count {
                                block[(p * t_count + t, q * t_count + t2)] +=
                                    mu * dt * sect * tables.mass[(t, t2)] * coupling;
                            }
                        }
                    }
                }
                lap.add_block(cell[side_v], cell[side_u], &block);
            }
        }
    }
    Ok(lap)
}

/// Velocity mass matrix times `rho`; block diagonal over the dual cells.
pub fn assemble_mass(grid: &StaggeredGrid, vel: &TensorBasis, rho: f64) -> Result<BlockMatrix> {
    check_velocity_basis(grid, vel)?;
    if rho <= 0.0 {
        return Err(Error::InvalidArgument(format!("density must be positive (rho = {rho})")));
    }
    let n = grid.n();
    let t_count = vel.transverse_count();
    let na = vel.axial().node_count();
    let s = vel.count();
    let tables = transverse_tables(vel);
    let rule = axial_rule(vel);
    let ax = vel.axial();

    let mut mass = BlockMatrix::zeros(n + 1, n + 1, s, s);
    for i in 0..=n {
        let (lo, _) = grid.dual_span(i);
        let h = grid.dual_cell_length(i);
        let mut block = DMatrix::zeros(s, s);
        for piece in dual_pieces(grid, i) {
            let sect = grid.section(piece.primal);
            for a in 0..na {
                for a2 in 0..na {
                    let imass = integrate(&rule, piece.x_lo, piece.x_hi, |x| {
                        let xi = (x - lo) / h;
                        ax.eval(a, xi) * ax.eval(a2, xi)
                    });
                    for t in 0..t_count {
                        for t2 in 0..t_count {
                            block[(a * t_count + t, a2 * t_count + t2)] +=
                                rho * imass * sect * tables.mass[(t, t2)];
                        }
                    }
                }
            }
        }
        mass.add_block(i, i, &block);
    }
    Ok(mass)
}

/// Discrete pressure gradient acting on velocity test functions, scaled by
/// `dt`.  Volume terms use the broken axial derivative of the pressure;
/// the pressure jumps at the interior primal interfaces (which sit at the
/// dual cell midpoints) enter against the test trace there.
pub fn assemble_gradient(
    grid: &StaggeredGrid,
    vel: &TensorBasis,
    press: &TensorBasis,
) -> Result<BlockMatrix> {
    check_velocity_basis(grid, vel)?;
    check_pressure_basis(press)?;
    let n = grid.n();
    let dt = grid.dt();
    let dx = grid.dx();
    let t_count = vel.transverse_count();
    let na = vel.axial().node_count();
    let np = press.count();
    let s = vel.count();
    let tables = transverse_tables(vel);
    let rule = axial_rule(vel);
    let ax = vel.axial();
    let pax = press.axial();

    let mut grad = BlockMatrix::zeros(n + 1, n, s, np);

    for i in 0..=n {
        let (lo, _) = grid.dual_span(i);
        let h = grid.dual_cell_length(i);
        for piece in dual_pieces(grid, i) {
            let j = piece.primal;
            let sect = grid.section(j);
            let px0 = j as f64 * dx;
            let mut block = DMatrix::zeros(s, np);
            for a in 0..na {
                for b in 0..np {
                    let icross = integrate(&rule, piece.x_lo, piece.x_hi, |x| {
                        ax.eval(a, (x - lo) / h) * pax.deriv(b, (x - px0) / dx)
                    }) / dx;
                    for t in 0..t_count {
                        block[(a * t_count + t, b)] += dt * sect * tables.weight[t] * icross;
                    }
                }
            }
            grad.add_block(i, j, &block);
        }
    }

    // Pressure jump at the interface x = m dx, tested against the velocity
    // trace from dual cell m (the interface is its midpoint).
    for m in 1..n {
        let (lo, _) = grid.dual_span(m);
        let h = grid.dual_cell_length(m);
        let xi_star = (m as f64 * dx - lo) / h;
        let sect = grid.section_at_interface(m);
        let mut right = DMatrix::zeros(s, np);
        let mut left = DMatrix::zeros(s, np);
        for a in 0..na {
            let phi = ax.eval(a, xi_star);
            for b in 0..np {
                for t in 0..t_count {
                    let base = dt * sect * tables.weight[t] * phi;
                    right[(a * t_count + t, b)] += base * pax.eval(b, 0.0);
                    left[(a * t_count + t, b)] -= base * pax.eval(b, 1.0);
                }
            }
        }
        grad.add_block(m, m, &right);
        grad.add_block(m, m - 1, &left);
    }
    Ok(grad)
}

/// Continuity rows, entered negated and unscaled.  Each primal cell tests
/// the broken axial derivative of the velocity plus the jump across the dual
/// interface at its center.
pub fn assemble_divergence(
    grid: &StaggeredGrid,
    vel: &TensorBasis,
    press: &TensorBasis,
) -> Result<BlockMatrix> {
    check_velocity_basis(grid, vel)?;
    check_pressure_basis(press)?;
    let n = grid.n();
    let dx = grid.dx();
    let t_count = vel.transverse_count();
    let na = vel.axial().node_count();
    let np = press.count();
    let s = vel.count();
    let tables = transverse_tables(vel);
    let rule = axial_rule(vel);
    let ax = vel.axial();
    let pax = press.axial();

    let mut div = BlockMatrix::zeros(n, n + 1, np, s);

    for j in 0..n {
        let sect = grid.section(j);
        let px0 = j as f64 * dx;
        let center = px0 + 0.5 * dx;
        // Overlaps of primal cell j: the right half of dual cell j and the
        // left half of dual cell j + 1 (the end duals contribute whole cells).
        for (i, x_lo, x_hi) in [(j, px0, center), (j + 1, center, px0 + dx)] {
            let (lo, _) = grid.dual_span(i);
            let h = grid.dual_cell_length(i);
            let mut block = DMatrix::zeros(np, s);
            for b in 0..np {
                for a in 0..na {
                    let icross = integrate(&rule, x_lo, x_hi, |x| {
                        pax.eval(b, (x - px0) / dx) * ax.deriv(a, (x - lo) / h)
                    }) / h;
                    for t in 0..t_count {
                        block[(b, a * t_count + t)] -= sect * tables.weight[t] * icross;
                    }
                }
            }
            div.add_block(j, i, &block);
        }
        // Velocity jump across the dual interface at the cell center; the
        // sign pairs with the negated volume term so that interior block
        // columns transpose onto the gradient.
        let mut here = DMatrix::zeros(np, s);
        let mut next = DMatrix::zeros(np, s);
        for b in 0..np {
            let theta = pax.eval(b, 0.5);
            for a in 0..na {
                for t in 0..t_count {
                    let base = sect * tables.weight[t] * theta;
                    here[(b, a * t_count + t)] += base * ax.eval(a, 1.0);
                    next[(b, a * t_count + t)] -= base * ax.eval(a, 0.0);
                }
            }
        }
        div.add_block(j, j, &here);
        div.add_block(j, j + 1, &next);
    }
    Ok(div)
}

/// Pressure jump penalty over the interior primal interfaces, entered with
/// the same negative sign as the continuity rows and weighted by `dx`.
pub fn assemble_pressure_penalty(grid: &StaggeredGrid, press: &TensorBasis) -> Result<BlockMatrix> {
    check_pressure_basis(press)?;
    let n = grid.n();
    let dx = grid.dx();
    let np = press.count();
    let pax = press.axial();

    let mut pen = BlockMatrix::zeros(n, n, np, np);
    for m in 1..n {
        let sect = grid.section_at_interface(m);
        // Jump of a pressure function at x = m dx: trace from cell m minus
        // trace from cell m - 1.
        let jump: Vec<(usize, usize, f64)> = (0..np)
            .map(|b| (m, b, pax.eval(b, 0.0)))
            .chain((0..np).map(|b| (m - 1, b, -pax.eval(b, 1.0))))
            .collect();
        for &(cr, br, vr) in &jump {
            for &(cc, bc, vc) in &jump {
                if vr != 0.0 && vc != 0.0 {
                    pen.add_entry(cr * np + br, cc * np + bc, -dx * sect * vr * vc);
                }
            }
        }
    }
    Ok(pen)
}

/// Parabolic (Poiseuille) inflow profile with a prescribed flow rate, in the
/// reference transverse coordinates of the first primal cell.
#[derive(Debug, Clone, Copy)]
pub struct ParabolicInlet {
    flow_rate: f64,
    width: f64,
    height: Option<f64>,
}

impl ParabolicInlet {
    pub fn for_grid(grid: &StaggeredGrid, flow_rate: f64) -> Self {
        ParabolicInlet {
            flow_rate,
            width: grid.width(0),
            height: grid.height_samples().map(|h| h[0]),
        }
    }

    pub fn flow_rate(&self) -> f64 {
        self.flow_rate
    }

    /// Axial velocity at reference transverse coordinates `(eta, zeta)`;
    /// `zeta` is ignored in 2D.  Integrating against the section measure
    /// recovers the flow rate exactly.
    pub fn eval(&self, eta: f64, zeta: f64) -> f64 {
        match self.height {
            None => 6.0 * self.flow_rate / self.width * eta * (1.0 - eta),
            Some(h) => {
                36.0 * self.flow_rate / (self.width * h)
                    * eta
                    * (1.0 - eta)
                    * zeta
                    * (1.0 - zeta)
            }
        }
    }

    /// Mean axial velocity over the inlet section.
    pub fn mean_velocity(&self) -> f64 {
        self.flow_rate / (self.width * self.height.unwrap_or(1.0))
    }
}

/// Dirichlet values of an inlet profile at the nodes of one velocity cell.
pub fn inlet_nodal_values(vel: &TensorBasis, inlet: &ParabolicInlet) -> DVector<f64> {
    let t_count = vel.transverse_count();
    DVector::from_fn(vel.count(), |k, _| {
        let (_, ty, tz) = vel.split_index(k);
        let ly = vel.transverse_y().expect("velocity basis has a y factor");
        let eta = ly.nodes()[vel.active_y()[ty]];
        let zeta = match vel.transverse_z() {
            Some(lz) => lz.nodes()[vel.active_z()[tz]],
            None => 0.5,
        };
        let _ = t_count;
        inlet.eval(eta, zeta)
    })
}

/// Rows replaced by boundary conditions, with the right-hand side values the
/// replacement rows impose.
#[derive(Debug, Clone)]
pub struct BoundaryInfo {
    /// Number of velocity rows replaced at the head of the velocity vector.
    pub velocity_rows: usize,
    /// Number of pressure rows replaced at the tail of the pressure vector.
    pub pressure_rows: usize,
    /// Right-hand side for the replaced velocity rows (diagonal times the
    /// prescribed nodal value, so the rows stay on the matrix scale).
    pub velocity_values: DVector<f64>,
    /// Right-hand side for the replaced pressure rows.
    pub pressure_values: DVector<f64>,
}

impl BoundaryInfo {
    pub fn row_count(&self) -> usize {
        self.velocity_rows + self.pressure_rows
    }
}

/// The assembled one-step saddle-point system
/// `[[N, G], [D, E]] [u; p] = [b_u; b_p]` with `N = mass + viscous`.
///
/// Solvers work on the column-scaled form `A [u; y] = b` with `p = y / dt`,
/// which multiplies the pressure columns by `1 / dt`; [`scaled_matvec`]
/// applies that form directly.
///
/// [`scaled_matvec`]: SaddleSystem::scaled_matvec
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub grid: StaggeredGrid,
    pub vel_basis: TensorBasis,
    pub press_basis: TensorBasis,
    /// `rho * mass`, untouched by boundary conditions (right-hand sides are
    /// built from it).
    pub mass: BlockMatrix,
    /// Momentum block `N`; boundary conditions replace its inlet rows.
    pub momentum: BlockMatrix,
    /// Pressure gradient `G` (scaled by `dt`).
    pub gradient: BlockMatrix,
    /// Continuity rows `D` (negated).
    pub divergence: BlockMatrix,
    /// Pressure penalty `E` (negated).
    pub penalty: BlockMatrix,
    pub rho: f64,
    pub mu: f64,
    pub alpha0: f64,
    pub bc: Option<BoundaryInfo>,
}

impl SaddleSystem {
    pub fn n_velocity(&self) -> usize {
        self.momentum.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.penalty.nrows()
    }

    pub fn total_dim(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    /// Applies the column-scaled matrix `[[N, G / dt], [D, E / dt]]`.
    pub fn scaled_matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let nu = self.n_velocity();
        let np = self.n_pressure();
        assert_eq!(x.len(), nu + np, "saddle matvec dimension mismatch");
        let u = DVector::from(x.rows(0, nu).clone_owned());
        let p = DVector::from(x.rows(nu, np).clone_owned());
        let inv_dt = 1.0 / self.grid.dt();
        let mut y = DVector::zeros(nu + np);
        {
            let mut yu = self.momentum.matvec(&u);
            self.gradient.matvec_add(&p, &mut yu, inv_dt);
            y.rows_mut(0, nu).copy_from(&yu);
        }
        {
            let mut yp = self.divergence.matvec(&u);
            self.penalty.matvec_add(&p, &mut yp, inv_dt);
            y.rows_mut(nu, np).copy_from(&yp);
        }
        y
    }

    /// Dense copy of the column-scaled matrix.
    pub fn scaled_dense(&self) -> DMatrix<f64> {
        let nu = self.n_velocity();
        let np = self.n_pressure();
        let inv_dt = 1.0 / self.grid.dt();
        let mut a = DMatrix::zeros(nu + np, nu + np);
        a.view_mut((0, 0), (nu, nu)).copy_from(&self.momentum.to_dense());
        a.view_mut((0, nu), (nu, np)).copy_from(&(self.gradient.to_dense() * inv_dt));
        a.view_mut((nu, 0), (np, nu)).copy_from(&self.divergence.to_dense());
        a.view_mut((nu, nu), (np, np)).copy_from(&(self.penalty.to_dense() * inv_dt));
        a
    }

    /// Overwrites the boundary rows of a right-hand side with the values the
    /// replacement rows impose.  No-op before `apply_boundary_conditions`.
    pub fn apply_bc_to_rhs(&self, rhs_u: &mut DVector<f64>, rhs_p: &mut DVector<f64>) {
        if let Some(bc) = &self.bc {
            rhs_u.rows_mut(0, bc.velocity_rows).copy_from(&bc.velocity_values);
            let tail = self.n_pressure() - bc.pressure_rows;
            rhs_p.rows_mut(tail, bc.pressure_rows).copy_from(&bc.pressure_values);
        }
    }
}

/// Assembles the full system on `grid` with the given polynomial degrees.
pub fn assemble_saddle_system(
    grid: &StaggeredGrid,
    nx: usize,
    ny: usize,
    nz: Option<usize>,
    rho: f64,
    mu: f64,
    alpha0: f64,
) -> Result<SaddleSystem> {
    if grid.is_3d() != nz.is_some() {
        return Err(Error::InvalidArgument(
            "pass nz exactly when the grid carries height data".into(),
        ));
    }
    let vel_basis = lagrange_tensor_basis(nx, ny, nz, BasisRole::Velocity)?;
    let press_basis = lagrange_tensor_basis(nx, ny, nz, BasisRole::Pressure)?;
    let mass = assemble_mass(grid, &vel_basis, rho)?;
    let lap = assemble_laplacian(grid, &vel_basis, mu, alpha0)?;
    let mut momentum = mass.clone();
    momentum.add_scaled(&lap, 1.0)?;
    let gradient = assemble_gradient(grid, &vel_basis, &press_basis)?;
    let divergence = assemble_divergence(grid, &vel_basis, &press_basis)?;
    let penalty = assemble_pressure_penalty(grid, &press_basis)?;
    Ok(SaddleSystem {
        grid: grid.clone(),
        vel_basis,
        press_basis,
        mass,
        momentum,
        gradient,
        divergence,
        penalty,
        rho,
        mu,
        alpha0,
        bc: None,
    })
}

/// Replaces the inlet velocity rows by a strong Dirichlet condition and the
/// last pressure rows by an outlet pressure value.
///
/// The inlet rows keep their original momentum diagonal (everything else in
/// the row is dropped), so the replaced rows sit on the same scale as their
/// neighbors; the outlet rows are entered at the pressure-penalty scale
/// `-section * dx` for the same reason.
pub fn apply_boundary_conditions(
    sys: &mut SaddleSystem,
    inlet: &ParabolicInlet,
    outlet_pressure: f64,
) -> Result<()> {
    if sys.bc.is_some() {
        return Err(Error::InvalidArgument("boundary conditions already applied".into()));
    }
    let s = sys.vel_basis.count();
    let np = sys.press_basis.count();
    let n = sys.grid.n();
    let dx = sys.grid.dx();

    // Inlet: Dirichlet on every degree of freedom of the first dual cell.
    let nodal = inlet_nodal_values(&sys.vel_basis, inlet);
    let diag: Vec<f64> = (0..s).map(|r| sys.momentum.entry(r, r)).collect();
    sys.momentum.clear_block_row(0);
    let mut diag_block = DMatrix::zeros(s, s);
    for r in 0..s {
        diag_block[(r, r)] = diag[r];
    }
    sys.momentum.add_block(0, 0, &diag_block);
    sys.gradient.clear_block_row(0);
    let velocity_values = DVector::from_fn(s, |r, _| diag[r] * nodal[r]);

    // Outlet: fix the last pressure cell.
    let sect = sys.grid.section(n - 1);
    let scale = -sect * dx;
    sys.divergence.clear_block_row(n - 1);
    sys.penalty.clear_block_row(n - 1);
    sys.penalty.add_block(n - 1, n - 1, &(DMatrix::identity(np, np) * scale));
    let pressure_values = DVector::from_element(np, scale * outlet_pressure);

    sys.bc = Some(BoundaryInfo {
        velocity_rows: s,
        pressure_rows: np,
        velocity_values,
        pressure_values,
    });
    Ok(())
}

/// Quadrature size for integrands with three basis factors (the nonlinear
/// flux against a test function).
fn convective_rule_points(degree: usize) -> usize {
    (3 * degree + 4).div_ceil(2)
}

/// Weak form of the axial Burgers flux `u^2` with a local Lax-Friedrichs
/// (Rusanov) face flux: volume term against the broken test derivative plus
/// face terms at the dual interfaces, the inlet (exterior state = prescribed
/// profile) and the outlet (exterior state copied from inside).
fn convective_weak_form(
    grid: &StaggeredGrid,
    vel: &TensorBasis,
    state: &DVector<f64>,
    inlet: &ParabolicInlet,
) -> DVector<f64> {
    let n = grid.n();
    let s = vel.count();
    let t_count = vel.transverse_count();
    let na = vel.axial().node_count();
    let ax = vel.axial();
    let is_3d = vel.transverse_z().is_some();

    let ax_rule = gauss_quadrature(convective_rule_points(ax.degree())).expect("positive rule");
    let ty_rule = gauss_quadrature(convective_rule_points(
        vel.transverse_y().map_or(0, |l| l.degree()),
    ))
    .expect("positive rule");
    let tz_rule = gauss_quadrature(convective_rule_points(
        vel.transverse_z().map_or(0, |l| l.degree()),
    ))
    .expect("positive rule");

    // Transverse quadrature grid: points, weights, and basis values per
    // retained transverse combination.
    let mut tq: Vec<(f64, f64, f64, Vec<f64>)> = Vec::new();
    for (&eta, &wy) in ty_rule.points.iter().zip(&ty_rule.weights) {
        if is_3d {
            for (&zeta, &wz) in tz_rule.points.iter().zip(&tz_rule.weights) {
                let vals = (0..t_count)
                    .map(|t| {
                        // Index t is the flat index of axial node 0, so it
                        // splits into the transverse pair directly.
                        let (_, ty, tz) = vel.split_index(t);
                        let ly = vel.transverse_y().unwrap();
                        let lz = vel.transverse_z().unwrap();
                        ly.eval(vel.active_y()[ty], eta) * lz.eval(vel.active_z()[tz], zeta)
                    })
                    .collect();
                tq.push((eta, zeta, wy * wz, vals));
            }
        } else {
            let vals = (0..t_count)
                .map(|t| {
                    let ly = vel.transverse_y().unwrap();
                    ly.eval(vel.active_y()[t], eta)
                })
                .collect();
            tq.push((eta, 0.5, wy, vals));
        }
    }

    let mut out = DVector::zeros(state.len());

    // Volume terms.
    for i in 0..=n {
        let (lo, _) = grid.dual_span(i);
        let h = grid.dual_cell_length(i);
        for piece in dual_pieces(grid, i) {
            let sect = grid.section(piece.primal);
            let len = piece.x_hi - piece.x_lo;
            for (&xq, &wx) in ax_rule.points.iter().zip(&ax_rule.weights) {
                let x = piece.x_lo + len * xq;
                let xi = (x - lo) / h;
                let ax_vals: Vec<f64> = (0..na).map(|a| ax.eval(a, xi)).collect();
                let ax_ders: Vec<f64> = (0..na).map(|a| ax.deriv(a, xi)).collect();
                for (_, _, wt, tvals) in &tq {
                    let point_val: f64 = (0..s)
                        .map(|k| {
                            let (a, _, _) = vel.split_index(k);
                            state[i * s + k] * ax_vals[a] * tvals[k % t_count]
                        })
                        .sum();
                    let meas = wx * len * sect * wt;
                    let flux = point_val * point_val;
                    for a in 0..na {
                        for t in 0..t_count {
                            out[i * s + a * t_count + t] -=
                                meas * flux * (ax_ders[a] / h) * tvals[t];
                        }
                    }
                }
            }
        }
    }

    // Face terms: dual interfaces at the primal centers plus the two ends.
    // Signed surface contribution: +flux * trace at a cell's right end,
    // -flux * trace at its left end.
    let trace_at = |cell: usize, xi: f64, tvals: &[f64]| -> f64 {
        let base = cell * s;
        (0..s)
            .map(|k| {
                let (a, _, _) = vel.split_index(k);
                state[base + k] * ax.eval(a, xi) * tvals[k % t_count]
            })
            .sum()
    };
    let rusanov = |ul: f64, ur: f64| -> f64 {
        let speed = 2.0 * ul.abs().max(ur.abs());
        0.5 * (ul * ul + ur * ur) - 0.5 * speed * (ur - ul)
    };

    for (eta, zeta, wt, tvals) in &tq {
        // Interior dual interfaces, inside primal cell f.
        for f in 0..n {
            let sect = grid.section(f);
            let ul = trace_at(f, 1.0, tvals);
            let ur = trace_at(f + 1, 0.0, tvals);
            let flux = rusanov(ul, ur);
            let meas = sect * wt;
            for a in 0..na {
                let right_trace = ax.eval(a, 1.0);
                let left_trace = ax.eval(a, 0.0);
                for t in 0..t_count {
                    out[f * s + a * t_count + t] += meas * flux * right_trace * tvals[t];
                    out[(f + 1) * s + a * t_count + t] -= meas * flux * left_trace * tvals[t];
                }
            }
        }
        // Inlet: exterior state from the prescribed profile.
        {
            let g = inlet.eval(*eta, *zeta);
            let ui = trace_at(0, 0.0, tvals);
            let flux = rusanov(g, ui);
            let meas = grid.section(0) * wt;
            for a in 0..na {
                let left_trace = ax.eval(a, 0.0);
                for t in 0..t_count {
                    out[a * t_count + t] -= meas * flux * left_trace * tvals[t];
                }
            }
        }
        // Outlet: free outflow, exterior copied from inside.
        {
            let uo = trace_at(n, 1.0, tvals);
            let flux = uo * uo;
            let meas = grid.section(n - 1) * wt;
            for a in 0..na {
                let right_trace = ax.eval(a, 1.0);
                for t in 0..t_count {
                    out[n * s + a * t_count + t] += meas * flux * right_trace * tvals[t];
                }
            }
        }
    }
    out
}

/// Convective right-hand-side contribution for one implicit step:
/// `rho * M_hat * (u_adv - u)`, where `u_adv` advances the state through one
/// explicit step of the axial Burgers transport (three-stage
/// strong-stability-preserving Runge-Kutta) and `M_hat` is the unweighted
/// velocity mass matrix.
pub fn convective_rhs(
    grid: &StaggeredGrid,
    vel: &TensorBasis,
    state: &DVector<f64>,
    rho: f64,
    inlet: &ParabolicInlet,
) -> Result<DVector<f64>> {
    check_velocity_basis(grid, vel)?;
    let s = vel.count();
    let expected = (grid.n() + 1) * s;
    if state.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "velocity state has {} entries, grid and basis give {}",
            state.len(),
            expected
        )));
    }
    let mass_hat = assemble_mass(grid, vel, 1.0)?;
    // The mass matrix is block diagonal: factor each cell once.
    let factors: Vec<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = (0..=grid.n())
        .map(|i| {
            nalgebra::linalg::LU::new(
                mass_hat.block(i, i).expect("mass diagonal block").clone(),
            )
        })
        .collect();
    let solve_mass = |r: &DVector<f64>| -> Result<DVector<f64>> {
        let mut out = DVector::zeros(r.len());
        for (i, lu) in factors.iter().enumerate() {
            let seg = DVector::from(r.rows(i * s, s).clone_owned());
            let sol = lu
                .solve(&seg)
                .ok_or(Error::ZeroPivot { row: i * s })?;
            out.rows_mut(i * s, s).copy_from(&sol);
        }
        Ok(out)
    };
    let rate = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let k = convective_weak_form(grid, vel, v, inlet);
        Ok(-solve_mass(&k)?)
    };

    let dt = grid.dt();
    let u0 = state;
    let k0 = rate(u0)?;
    let u1 = u0 + &k0 * dt;
    let k1 = rate(&u1)?;
    let u2 = u0 * 0.75 + (&u1 + &k1 * dt) * 0.25;
    let k2 = rate(&u2)?;
    let u_adv = u0 * (1.0 / 3.0) + (&u2 + &k2 * dt) * (2.0 / 3.0);

    Ok(mass_hat.matvec(&(u_adv - u0)) * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_staggered_grid;
    use approx::assert_abs_diff_eq;

    const WIDTH: f64 = 0.025;
    const MU: f64 = 1e-3;

    fn grid_2d(n: usize, c: f64) -> StaggeredGrid {
        build_staggered_grid(n, 1.0, |_| WIDTH, c).unwrap()
    }

    fn vel_p1p3() -> TensorBasis {
        lagrange_tensor_basis(1, 3, None, BasisRole::Velocity).unwrap()
    }

    fn press_p1() -> TensorBasis {
        lagrange_tensor_basis(1, 3, None, BasisRole::Pressure).unwrap()
    }

    /// The transverse mass of the retained cubic node functions in the block
    /// stencils below: `2 * X` with `X = [[1/2, -1/16], [-1/16, 1/2]]`,
    /// common factor pulled out.
    fn x_matrix() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.5, -1.0 / 16.0, -1.0 / 16.0, 0.5])
    }

    fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a.kronecker(b)
    }

    #[test]
    fn laplacian_interior_blocks_extrapolate_to_frozen_stencil() {
        // The viscous blocks are an exact affine function of dx^2 once dt
        // tracks dx (only the transverse gradient term depends on the mesh),
        // so one Richardson step recovers the mesh-free limit to round-off.
        let c = 0.5;
        let lap8 = assemble_laplacian(&grid_2d(8, c), &vel_p1p3(), MU, 1.0).unwrap();
        let lap16 = assemble_laplacian(&grid_2d(16, c), &vel_p1p3(), MU, 1.0).unwrap();
        let limit = |coarse: &DMatrix<f64>, fine: &DMatrix<f64>| (fine * 4.0 - coarse) / 3.0;

        // Interior blocks are translation invariant; compare one of each.
        let diag = limit(lap8.block(4, 4).unwrap(), lap16.block(8, 8).unwrap());
        let sub = limit(lap8.block(4, 3).unwrap(), lap16.block(8, 7).unwrap());
        let sup = limit(lap8.block(4, 5).unwrap(), lap16.block(8, 9).unwrap());

        let scale = 27.0 / 70.0 * WIDTH * MU * c;
        let x = x_matrix();
        let expect_diag = kron(&DMatrix::identity(2, 2), &(&x * 2.0)) * scale;
        let expect_off = kron(&DMatrix::identity(2, 2), &(-&x)) * scale;

        assert_abs_diff_eq!(diag, expect_diag, epsilon = 1e-12 * scale.max(1.0));
        assert_abs_diff_eq!(sub, expect_off, epsilon = 1e-12);
        assert_abs_diff_eq!(sup, expect_off, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_is_symmetric() {
        let lap = assemble_laplacian(&grid_2d(6, 1.0), &vel_p1p3(), MU, 1.0).unwrap();
        let dense = lap.to_dense();
        assert_abs_diff_eq!(dense.clone(), dense.transpose(), epsilon = 1e-15);
    }

    #[test]
    fn mass_blocks_are_exact_kronecker_products() {
        let rho = 1000.0;
        let n = 8;
        let g = grid_2d(n, 1.0);
        let mass = assemble_mass(&g, &vel_p1p3(), rho).unwrap();
        let axial = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let expect = kron(&axial, &x_matrix()) * (9.0 / 70.0 * WIDTH * g.dx() * rho);
        assert_abs_diff_eq!(mass.block(4, 4).unwrap().clone(), expect, epsilon = 1e-13);
        // End cells are half length.
        assert_abs_diff_eq!(mass.block(0, 0).unwrap().clone(), &expect * 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(mass.block(n, n).unwrap().clone(), &expect * 0.5, epsilon = 1e-13);
        // Mass is cell local.
        assert!(mass.block(4, 5).is_none());
    }

    /// Interior pressure-gradient block: rows ordered axial-major over
    /// (axial node, transverse node), columns over the two pressure nodes.
    fn g0_block(dt: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            2,
            &[
                3.0, 1.0, //
                3.0, 1.0, //
                1.0, 3.0, //
                1.0, 3.0,
            ],
        ) * (3.0 / 64.0 * WIDTH * dt)
    }

    #[test]
    fn gradient_interior_blocks_match_frozen_stencil() {
        let g = grid_2d(8, 0.5);
        let grad = assemble_gradient(&g, &vel_p1p3(), &press_p1()).unwrap();
        let g0 = g0_block(g.dt());
        assert_abs_diff_eq!(grad.block(4, 4).unwrap().clone(), g0, epsilon = 1e-15);
        assert_abs_diff_eq!(grad.block(4, 3).unwrap().clone(), -&g0, epsilon = 1e-15);
        // Exactly two block diagonals.
        assert!(grad.block(4, 5).is_none());
        assert!(grad.block(4, 2).is_none());
    }

    #[test]
    fn divergence_interior_blocks_transpose_the_gradient() {
        let g = grid_2d(8, 0.5);
        let grad = assemble_gradient(&g, &vel_p1p3(), &press_p1()).unwrap();
        let div = assemble_divergence(&g, &vel_p1p3(), &press_p1()).unwrap();
        let inv_dt = 1.0 / g.dt();

        let d0 = g0_block(g.dt()).transpose() * inv_dt;
        assert_abs_diff_eq!(div.block(4, 4).unwrap().clone(), d0, epsilon = 1e-13);
        assert_abs_diff_eq!(div.block(4, 5).unwrap().clone(), -&d0, epsilon = 1e-13);

        // All interior blocks transpose onto the gradient...
        for j in 1..g.n() - 1 {
            for i in [j, j + 1] {
                let dt_block = grad.block(i, j).unwrap().transpose() * inv_dt;
                assert_abs_diff_eq!(div.block(j, i).unwrap().clone(), dt_block, epsilon = 1e-13);
            }
        }
        // ...while the end blocks pick up extra endpoint terms.
        let first = div.block(0, 0).unwrap();
        let first_t = grad.block(0, 0).unwrap().transpose() * inv_dt;
        assert!((first - &first_t).amax() > 1e-6 * first.amax());
    }

    #[test]
    fn penalty_blocks_match_frozen_stencil() {
        let g = grid_2d(8, 1.0);
        let pen = assemble_pressure_penalty(&g, &press_p1()).unwrap();
        let scale = WIDTH * g.dx();
        let diag = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]) * scale;
        let sub = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]) * scale;
        let sup = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]) * scale;
        assert_abs_diff_eq!(pen.block(4, 4).unwrap().clone(), diag, epsilon = 1e-15);
        assert_abs_diff_eq!(pen.block(4, 3).unwrap().clone(), sub, epsilon = 1e-15);
        assert_abs_diff_eq!(pen.block(4, 5).unwrap().clone(), sup, epsilon = 1e-15);

        // Constants are in the kernel: jumps of a constant vanish.
        let ones = DVector::from_element(pen.ncols(), 1.0);
        assert_abs_diff_eq!(pen.matvec(&ones).amax(), 0.0, epsilon = 1e-15);

        // Negative semidefinite.
        let eigs = pen.to_dense().symmetric_eigenvalues();
        assert!(eigs.iter().all(|&l| l < 1e-13));
    }

    #[test]
    fn operator_dimensions() {
        let g = grid_2d(10, 1.0);
        let sys = assemble_saddle_system(&g, 1, 3, None, 1000.0, MU, 1.0).unwrap();
        assert_eq!(sys.n_velocity(), 44); // (n + 1) * (nx + 1) * (ny - 1)
        assert_eq!(sys.n_pressure(), 20); // n * (nx + 1)
        assert_eq!(sys.gradient.nrows(), 44);
        assert_eq!(sys.gradient.ncols(), 20);
        assert_eq!(sys.divergence.nrows(), 20);
        assert_eq!(sys.divergence.ncols(), 44);
    }

    #[test]
    fn momentum_block_is_symmetric_positive_definite() {
        let sys = assemble_saddle_system(&grid_2d(8, 1.0), 1, 3, None, 1000.0, MU, 1.0).unwrap();
        let dense = sys.momentum.to_dense();
        assert_abs_diff_eq!(dense.clone(), dense.transpose(), epsilon = 1e-14);
        let eigs = dense.symmetric_eigenvalues();
        assert!(eigs.iter().all(|&l| l > 0.0), "min eigenvalue {}", eigs.min());
    }

    #[test]
    fn boundary_conditions_replace_the_right_rows() {
        let n = 8;
        let g = grid_2d(n, 1.0);
        let mut sys = assemble_saddle_system(&g, 1, 3, None, 1000.0, MU, 1.0).unwrap();
        let pre_diag: Vec<f64> = (0..4).map(|r| sys.momentum.entry(r, r)).collect();
        let q = 5e-6;
        let inlet = ParabolicInlet::for_grid(&g, q);
        apply_boundary_conditions(&mut sys, &inlet, 0.0).unwrap();

        let bc = sys.bc.as_ref().unwrap();
        assert_eq!(bc.row_count(), 4 + 2);

        // Inlet rows: diagonal kept, all off-diagonal couplings dropped.
        let dense_n = sys.momentum.to_dense();
        for r in 0..4 {
            for c in 0..sys.n_velocity() {
                let want = if c == r { pre_diag[r] } else { 0.0 };
                assert_abs_diff_eq!(dense_n[(r, c)], want, epsilon = 1e-15);
            }
        }
        let dense_g = sys.gradient.to_dense();
        for r in 0..4 {
            assert_eq!(dense_g.row(r).amax(), 0.0);
        }

        // Both retained transverse nodes of the parabolic profile take the
        // same value: 6 q / d * (1/3) * (2/3).
        let g_node = 6.0 * q / WIDTH * (1.0 / 3.0) * (2.0 / 3.0);
        for r in 0..4 {
            assert_abs_diff_eq!(bc.velocity_values[r], pre_diag[r] * g_node, epsilon = 1e-18);
        }

        // Outlet rows: continuity dropped, penalty diagonal at -section * dx.
        let np_total = sys.n_pressure();
        let dense_d = sys.divergence.to_dense();
        let dense_e = sys.penalty.to_dense();
        for r in np_total - 2..np_total {
            assert_eq!(dense_d.row(r).amax(), 0.0);
            for c in 0..np_total {
                let want = if c == r { -WIDTH * g.dx() } else { 0.0 };
                assert_abs_diff_eq!(dense_e[(r, c)], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn scaled_matvec_matches_dense() {
        let mut sys = assemble_saddle_system(&grid_2d(6, 1.0), 1, 3, None, 1000.0, MU, 1.0).unwrap();
        let inlet = ParabolicInlet::for_grid(&sys.grid, 5e-6);
        apply_boundary_conditions(&mut sys, &inlet, 0.0).unwrap();
        let dim = sys.total_dim();
        let x = DVector::from_iterator(dim, (0..dim).map(|k| ((3 * k + 1) as f64).sin()));
        let dense = sys.scaled_dense();
        assert_abs_diff_eq!(sys.scaled_matvec(&x), &dense * &x, epsilon = 1e-12);
    }

    #[test]
    fn parabolic_inlet_integrates_to_flow_rate() {
        let g = grid_2d(4, 1.0);
        let inlet = ParabolicInlet::for_grid(&g, 5e-6);
        let rule = gauss_quadrature(5).unwrap();
        let integral: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&eta, &w)| w * inlet.eval(eta, 0.5) * WIDTH)
            .sum();
        assert_abs_diff_eq!(integral, 5e-6, epsilon = 1e-18);

        // 3D: flow rate recovered by the double integral over the section.
        let g3 = crate::grid::build_staggered_grid_3d(4, 1.0, |_| 0.025, |_| 0.025, 1.0).unwrap();
        let inlet3 = ParabolicInlet::for_grid(&g3, 5e-6);
        let mut integral3 = 0.0;
        for (&eta, &wy) in rule.points.iter().zip(&rule.weights) {
            for (&zeta, &wz) in rule.points.iter().zip(&rule.weights) {
                integral3 += wy * wz * inlet3.eval(eta, zeta) * 0.025 * 0.025;
            }
        }
        assert_abs_diff_eq!(integral3, 5e-6, epsilon = 1e-18);
    }

    #[test]
    fn convective_rhs_vanishes_for_resting_fluid_and_closed_inlet() {
        let g = grid_2d(8, 1.0);
        let vel = vel_p1p3();
        let state = DVector::zeros((g.n() + 1) * vel.count());
        let inlet = ParabolicInlet::for_grid(&g, 0.0);
        let rhs = convective_rhs(&g, &vel, &state, 1000.0, &inlet).unwrap();
        assert_abs_diff_eq!(rhs.amax(), 0.0, epsilon = 1e-18);
    }

    #[test]
    fn convective_rhs_of_developed_flow_is_confined_to_the_inlet_region() {
        // A state that repeats the same transverse profile in every cell is
        // flux-balanced away from the inlet: every interior residual cancels
        // between volume and face terms, so only the inlet mismatch acts,
        // and three explicit stages push it at most three cells in.
        let g = grid_2d(12, 1.0);
        let vel = vel_p1p3();
        let s = vel.count();
        let profile = [0.9, 1.1];
        let state = DVector::from_fn((g.n() + 1) * s, |k, _| profile[(k % s) % 2]);
        let inlet = ParabolicInlet::for_grid(&g, 5e-6);
        let rhs = convective_rhs(&g, &vel, &state, 1000.0, &inlet).unwrap();

        let cell_norm =
            |i: usize| (0..s).map(|k| rhs[i * s + k].abs()).fold(0.0f64, f64::max);
        assert!(cell_norm(0) > 0.0);
        // Downstream the balance holds by cancellation of volume against face
        // integrals, so round-off (not an exact zero) is the floor.
        for i in 4..=g.n() {
            assert!(cell_norm(i) <= 1e-12 * cell_norm(0), "cell {i}: {}", cell_norm(i));
        }
    }

    #[test]
    fn convective_perturbation_spreads_three_cells_per_step() {
        let g = grid_2d(14, 1.0);
        let vel = vel_p1p3();
        let s = vel.count();
        let mut state = DVector::zeros((g.n() + 1) * s);
        for k in 0..s {
            state[7 * s + k] = 1.0;
        }
        let inlet = ParabolicInlet::for_grid(&g, 0.0);
        let rhs = convective_rhs(&g, &vel, &state, 1000.0, &inlet).unwrap();
        let cell_norm =
            |i: usize| (0..s).map(|k| rhs[i * s + k].abs()).fold(0.0f64, f64::max);
        for i in 0..=g.n() {
            if !(4..=10).contains(&i) {
                assert_abs_diff_eq!(cell_norm(i), 0.0, epsilon = 1e-16);
            }
        }
        assert!(cell_norm(7) > 0.0);
    }

    #[test]
    fn basis_grid_mismatch_is_rejected() {
        let g2 = grid_2d(4, 1.0);
        let vel3 = lagrange_tensor_basis(1, 3, Some(2), BasisRole::Velocity).unwrap();
        assert!(assemble_laplacian(&g2, &vel3, MU, 1.0).is_err());
        assert!(assemble_mass(&g2, &vel3, 1.0).is_err());
        let press = press_p1();
        assert!(assemble_gradient(&g2, &press, &press).is_err());
    }
}
