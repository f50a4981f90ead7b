//! Staggered primal/dual grid for the quasi-1D pipe.
//!
//! The pipe axis `[0, L]` is split into `n` primal cells of length `dx = L/n`
//! carrying the pressure. Velocities live on a dual grid of `n + 1` cells whose
//! interior cells are the primal cells shifted by `dx/2`; the first and last
//! dual cells are the halves cut off at the domain ends, so the dual lengths
//! are `dx/2, dx, ..., dx, dx/2`. Pressure-jump faces sit at the interior
//! primal interfaces (the midpoints of the interior dual cells), velocity DG
//! faces at the primal cell centers.
//!
//! The cross-section is described by a width `d(x)` (and a height `h(x)` in
//! 3D), sampled once per primal cell at the cell center and treated as
//! constant on that cell. The time step is tied to the grid through the fixed
//! coupling `dt = c * dx`, which is what keeps the scaled operator blocks
//! `O(1)` under refinement.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StaggeredGrid {
    n: usize,
    length: f64,
    dx: f64,
    c: f64,
    dt: f64,
    /// Width `d` sampled at primal cell centers, one value per primal cell.
    width: Vec<f64>,
    /// Height samples for 3D runs; `None` for planar (2D) runs.
    height: Option<Vec<f64>>,
}

/// Builds the 2D staggered grid with `n` primal cells on `[0, length]`,
/// sampling `width_fn` at the primal cell centers. `c = dt/dx` fixes the time
/// step.
pub fn build_staggered_grid(
    n: usize,
    length: f64,
    width_fn: impl Fn(f64) -> f64,
    c: f64,
) -> Result<StaggeredGrid> {
    build_inner(n, length, width_fn, None::<fn(f64) -> f64>, c)
}

/// 3D variant: the cross-section is the rectangle `width(x) x height(x)`.
pub fn build_staggered_grid_3d(
    n: usize,
    length: f64,
    width_fn: impl Fn(f64) -> f64,
    height_fn: impl Fn(f64) -> f64,
    c: f64,
) -> Result<StaggeredGrid> {
    build_inner(n, length, width_fn, Some(height_fn), c)
}

fn build_inner(
    n: usize,
    length: f64,
    width_fn: impl Fn(f64) -> f64,
    height_fn: Option<impl Fn(f64) -> f64>,
    c: f64,
) -> Result<StaggeredGrid> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid needs n >= 1 primal cells".into()));
    }
    if !(length > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "length and c must be positive (got length = {length}, c = {c})"
        )));
    }
    let dx = length / n as f64;
    let centers: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dx).collect();
    let width: Vec<f64> = centers.iter().map(|&x| width_fn(x)).collect();
    if width.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument("width samples must be positive and finite".into()));
    }
    let height = match height_fn {
        Some(h) => {
            let samples: Vec<f64> = centers.iter().map(|&x| h(x)).collect();
            if samples.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "height samples must be positive and finite".into(),
                ));
            }
            Some(samples)
        }
        None => None,
    };
    Ok(StaggeredGrid { n, length, dx, c, dt: c * dx, width, height })
}

impl StaggeredGrid {
    /// Number of primal (pressure) cells.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of dual (velocity) cells, always `n + 1`.
    pub fn n_dual(&self) -> usize {
        self.n + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time-step coupling `c = dt / dx`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_3d(&self) -> bool {
        self.height.is_some()
    }

    /// Axial span of primal cell `j`.
    pub fn primal_span(&self, j: usize) -> (f64, f64) {
        debug_assert!(j < self.n);
        (j as f64 * self.dx, (j + 1) as f64 * self.dx)
    }

    pub fn primal_center(&self, j: usize) -> f64 {
        debug_assert!(j < self.n);
        (j as f64 + 0.5) * self.dx
    }

    /// Axial span of dual cell `i` (`0..=n`); the end cells are half length.
    pub fn dual_span(&self, i: usize) -> (f64, f64) {
        debug_assert!(i <= self.n);
        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * self.dx };
        let hi = if i == self.n { self.length } else { (i as f64 + 0.5) * self.dx };
        (lo, hi)
    }

    pub fn dual_cell_length(&self, i: usize) -> f64 {
        let (lo, hi) = self.dual_span(i);
        hi - lo
    }

    /// Width sample of primal cell `j`.
    pub fn width(&self, j: usize) -> f64 {
        self.width[j]
    }

    pub fn width_samples(&self) -> &[f64] {
        &self.width
    }

    pub fn height(&self, j: usize) -> f64 {
        self.height.as_ref().map(|h| h[j]).unwrap_or(1.0)
    }

    pub fn height_samples(&self) -> Option<&[f64]> {
        self.height.as_deref()
    }

    /// Cross-section measure of primal cell `j`: the width in 2D, the area
    /// `width * height` in 3D.
    pub fn section(&self, j: usize) -> f64 {
        match &self.height {
            Some(h) => self.width[j] * h[j],
            None => self.width[j],
        }
    }

    pub fn mean_section(&self) -> f64 {
        (0..self.n).map(|j| self.section(j)).sum::<f64>() / self.n as f64
    }

    /// Cross-section at the interior primal interface `x = j dx`
    /// (`1 <= j <= n-1`), taken as the mean of the two neighboring samples.
    pub fn section_at_interface(&self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j < self.n);
        0.5 * (self.section(j - 1) + self.section(j))
    }
}
