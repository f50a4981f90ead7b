//! Staggered discontinuous Galerkin discretization of incompressible flow in
//! elongated (quasi-1D) pipes, together with the spectral machinery that makes
//! its solvers fast: block Toeplitz/circulant structure, matrix-valued symbols
//! for every operator block, and symbol-derived circulant preconditioners for
//! the Krylov solver stack.
//!
//! The crate is organized along the pipeline:
//!
//! * [`grid`], [`basis`] — staggered primal/dual grids and tensor Lagrange bases;
//! * [`assembly`] — the saddle-point system `[[N, G], [D, E]]` (mass + viscous
//!   stiffness, pressure gradient, divergence, pressure penalty) and the
//!   explicit convective right-hand side;
//! * [`structured`] — block Toeplitz and block circulant matrices generated by
//!   matrix-valued symbols, with FFT apply/solve;
//! * [`symbols`] — closed-form symbols of the assembled blocks, their inverses,
//!   the Schur-complement symbols, and branch sampling;
//! * [`spectral`] — spectra, distribution discrepancies, Schur complements,
//!   power-law fits, and the permutation to block Toeplitz form;
//! * [`solvers`] — GMRES/FGMRES/CG, ILU(0), the circulant Schur preconditioners,
//!   the nested saddle-point solver stack, and the Picard time step;
//! * [`io`] — MatrixMarket / CSV / JSON export.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod grid;
pub mod io;
pub mod solvers;
pub mod sparse;
pub mod spectral;
pub mod structured;
pub mod symbols;

pub use error::{Error, Result};
