//! Tensor-product Lagrange bases on the reference cell `[0,1]^dim` and
//! Gauss--Legendre quadrature.
//!
//! Velocities use degree `nx` along the axis and degrees `ny` (and `nz` in 3D)
//! across the section, on equispaced nodes. No-slip wall values are eliminated
//! at construction: the transverse node layers on the walls are dropped, so a
//! velocity cell carries `(nx+1)(ny-1)` degrees of freedom in 2D and
//! `(nx+1)(ny-1)(nz-1)` in 3D, and every retained function vanishes on the
//! walls identically. Pressures are degree `nx` along the axis and constant
//! across the section: `nx+1` degrees of freedom per cell.
//!
//! The flat index convention is axial-major: `k = a * T + t`, with `a` the
//! axial node and `t` the transverse combination (`t = ty * (nz-1) + tz` in
//! 3D). This is the ordering in which the assembled blocks take their
//! Kronecker form `(axial structure) x (transverse mass)`.

use crate::error::{Error, Result};

/// One-dimensional Lagrange basis on equispaced nodes in `[0, 1]`.
///
/// Degree 0 is the single constant function with its node at `1/2`.
#[derive(Debug, Clone)]
pub struct Lagrange1d {
    nodes: Vec<f64>,
}

impl Lagrange1d {
    pub fn equispaced(degree: usize) -> Self {
        let nodes = if degree == 0 {
            vec![0.5]
        } else {
            (0..=degree).map(|j| j as f64 / degree as f64).collect()
        };
        Lagrange1d { nodes }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Value of the `i`-th nodal function at `x`.
    pub fn eval(&self, i: usize, x: f64) -> f64 {
        if self.nodes.len() == 1 {
            return 1.0;
        }
        let xi = self.nodes[i];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| (x - xj) / (xi - xj))
            .product()
    }

    /// Derivative of the `i`-th nodal function at `x`.
    pub fn deriv(&self, i: usize, x: f64) -> f64 {
        if self.nodes.len() == 1 {
            return 0.0;
        }
        let xi = self.nodes[i];
        let mut sum = 0.0;
        for (k, &xk) in self.nodes.iter().enumerate() {
            if k == i {
                continue;
            }
            let mut term = 1.0 / (xi - xk);
            for (j, &xj) in self.nodes.iter().enumerate() {
                if j != i && j != k {
                    term *= (x - xj) / (xi - xj);
                }
            }
            sum += term;
        }
        sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRole {
    Velocity,
    Pressure,
}

/// Tensor Lagrange basis for one cell, with the wall layers already removed
/// for velocities.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    role: BasisRole,
    axial: Lagrange1d,
    trans_y: Option<Lagrange1d>,
    trans_z: Option<Lagrange1d>,
    /// Retained transverse node indices (interior nodes for velocities).
    active_y: Vec<usize>,
    active_z: Vec<usize>,
}

/// Builds the tensor basis. For velocities `ny >= 2` is required (and
/// `nz >= 2` when present): a lower transverse degree leaves no interior node
/// once the wall values are eliminated.
pub fn lagrange_tensor_basis(
    nx: usize,
    ny: usize,
    nz: Option<usize>,
    role: BasisRole,
) -> Result<TensorBasis> {
    if nx == 0 {
        return Err(Error::InvalidArgument("axial degree nx must be >= 1".into()));
    }
    match role {
        BasisRole::Pressure => Ok(TensorBasis {
            role,
            axial: Lagrange1d::equispaced(nx),
            trans_y: None,
            trans_z: None,
            active_y: Vec::new(),
            active_z: Vec::new(),
        }),
        BasisRole::Velocity => {
            if ny < 2 {
                return Err(Error::InvalidArgument(format!(
                    "velocity basis needs ny >= 2 to keep interior nodes after wall elimination (got ny = {ny})"
                )));
            }
            let trans_y = Lagrange1d::equispaced(ny);
            let active_y: Vec<usize> = (1..ny).collect();
            let (trans_z, active_z) = match nz {
                Some(nz) => {
                    if nz < 2 {
                        return Err(Error::InvalidArgument(format!(
                            "velocity basis needs nz >= 2 in 3D (got nz = {nz})"
                        )));
                    }
                    (Some(Lagrange1d::equispaced(nz)), (1..nz).collect())
                }
                None => (None, Vec::new()),
            };
            Ok(TensorBasis {
                role,
                axial: Lagrange1d::equispaced(nx),
                trans_y: Some(trans_y),
                trans_z,
                active_y,
                active_z,
            })
        }
    }
}

impl TensorBasis {
    pub fn role(&self) -> BasisRole {
        self.role
    }

    pub fn axial(&self) -> &Lagrange1d {
        &self.axial
    }

    pub fn transverse_y(&self) -> Option<&Lagrange1d> {
        self.trans_y.as_ref()
    }

    pub fn transverse_z(&self) -> Option<&Lagrange1d> {
        self.trans_z.as_ref()
    }

    pub fn active_y(&self) -> &[usize] {
        &self.active_y
    }

    pub fn active_z(&self) -> &[usize] {
        &self.active_z
    }

    /// Number of retained transverse combinations (1 for pressures).
    pub fn transverse_count(&self) -> usize {
        match self.role {
            BasisRole::Pressure => 1,
            BasisRole::Velocity => {
                self.active_y.len() * if self.trans_z.is_some() { self.active_z.len() } else { 1 }
            }
        }
    }

    /// Degrees of freedom per cell.
    pub fn count(&self) -> usize {
        self.axial.node_count() * self.transverse_count()
    }

    /// Splits a flat index into (axial node, active-y position, active-z position).
    pub fn split_index(&self, k: usize) -> (usize, usize, usize) {
        let t_count = self.transverse_count();
        let a = k / t_count;
        let t = k % t_count;
        if self.trans_z.is_some() {
            let zc = self.active_z.len();
            (a, t / zc, t % zc)
        } else {
            (a, t, 0)
        }
    }

    /// Value of basis function `k` at a reference point
    /// (`[x]`, `[x, y]`, or `[x, y, z]` as appropriate).
    pub fn eval(&self, k: usize, point: &[f64]) -> f64 {
        let (a, ty, tz) = self.split_index(k);
        let mut v = self.axial.eval(a, point[0]);
        if let Some(ly) = &self.trans_y {
            v *= ly.eval(self.active_y[ty], point[1]);
        }
        if let Some(lz) = &self.trans_z {
            v *= lz.eval(self.active_z[tz], point[2]);
        }
        v
    }

    /// Reference gradient of basis function `k`; one component per coordinate.
    pub fn grad(&self, k: usize, point: &[f64]) -> Vec<f64> {
        let (a, ty, tz) = self.split_index(k);
        let ax = self.axial.eval(a, point[0]);
        let dax = self.axial.deriv(a, point[0]);
        match (&self.trans_y, &self.trans_z) {
            (None, _) => vec![dax],
            (Some(ly), None) => {
                let y = ly.eval(self.active_y[ty], point[1]);
                let dy = ly.deriv(self.active_y[ty], point[1]);
                vec![dax * y, ax * dy]
            }
            (Some(ly), Some(lz)) => {
                let y = ly.eval(self.active_y[ty], point[1]);
                let dy = ly.deriv(self.active_y[ty], point[1]);
                let z = lz.eval(self.active_z[tz], point[2]);
                let dz = lz.deriv(self.active_z[tz], point[2]);
                vec![dax * y * z, ax * dy * z, ax * y * dz]
            }
        }
    }
}

/// Gauss--Legendre rule with `points` nodes on `[0, 1]`; exact for
/// polynomials of degree `2 * points - 1`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn gauss_quadrature(points: usize) -> Result<QuadratureRule> {
    if points == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
    }
    let n = points;
    let mut xs = vec![0.0f64; n];
    let mut ws = vec![0.0f64; n];
    // Newton iteration on P_n over (-1, 1), then map to (0, 1).
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[k] = -x;
        xs[n - 1 - k] = x;
        ws[k] = w;
        ws[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
        let (_, dp) = legendre_with_deriv(n, 0.0);
        ws[n / 2] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule {
        points: xs.iter().map(|&x| 0.5 * (x + 1.0)).collect(),
        weights: ws.iter().map(|&w| 0.5 * w).collect(),
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Points per direction used by the assembly: enough for the products of two
/// basis functions and one extra derivative factor at degree `max_degree`.
pub fn assembly_rule_points(max_degree: usize) -> usize {
    (2 * max_degree + 3).div_ceil(2)
}
