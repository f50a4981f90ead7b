//! Empirical spectral analysis: dense eigenvalue and singular-value
//! extraction, comparison of matrix spectra against symbol branches, the
//! dense Schur complement, power-law fits of the small-eigenvalue tail,
//! and the permutation that reveals the saddle matrix as block Toeplitz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::structured::complex_matrix_eigenvalues;
use crate::symbols::{BranchKind, PhysicalParams};

/// Largest dimension the dense eigensolvers accept.  Larger runs are meant
/// to report iteration counts, never full spectra.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

type RealLu = nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// All eigenvalues (or singular values) of a dense matrix, ascending.
/// Symmetric matrices take the symmetric path; general ones report the
/// real parts of their complex spectrum.
pub fn matrix_spectrum(a: &DMatrix<f64>, kind: BranchKind) -> Result<Vec<f64>> {
    matrix_spectrum_with_limit(a, kind, DENSE_EIGEN_LIMIT)
}

/// [`matrix_spectrum`] with an explicit dimension cap.
pub fn matrix_spectrum_with_limit(
    a: &DMatrix<f64>,
    kind: BranchKind,
    limit: usize,
) -> Result<Vec<f64>> {
    let dim = a.nrows().max(a.ncols());
    if dim > limit {
        return Err(Error::DenseThreshold { dim, threshold: limit });
    }
    let mut values = match kind {
        BranchKind::SingularValues => a
            .clone()
            .svd_unordered(false, false)
            .singular_values
            .iter()
            .copied()
            .collect::<Vec<_>>(),
        BranchKind::Eigenvalues => {
            if !a.is_square() {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalues need a square matrix, got {}x{}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            let scale = a.amax();
            let asym = (a - a.transpose()).amax();
            if asym <= 1e-12 * scale {
                nalgebra::linalg::SymmetricEigen::try_new(a.clone(), 1e-13, 100_000)
                    .ok_or_else(|| {
                        Error::InvalidArgument(
                            "symmetric eigendecomposition did not converge".into(),
                        )
                    })?
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect()
            } else {
                complex_matrix_eigenvalues(&a.map(|v| Complex64::new(v, 0.0)))?
                    .iter()
                    .map(|z| z.re)
                    .collect()
            }
        }
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Sup and mean absolute difference between two sorted sample sequences of
/// equal length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub sup: f64,
    pub mean: f64,
}

/// Resamples a sorted pool to `m` points by linear interpolation of its
/// empirical quantile function; the identity whenever the counts already
/// agree.
fn resample_sorted(pool: &[f64], m: usize) -> Vec<f64> {
    if pool.len() == m {
        return pool.to_vec();
    }
    if m == 1 {
        return vec![pool[(pool.len() - 1) / 2]];
    }
    (0..m)
        .map(|i| {
            let t = i as f64 * (pool.len() - 1) as f64 / (m - 1) as f64;
            let lo = t.floor() as usize;
            let hi = t.ceil() as usize;
            let frac = t - lo as f64;
            pool[lo] * (1.0 - frac) + pool[hi] * frac
        })
        .collect()
}

/// Compares a matrix spectrum against symbol branch samples: both sides
/// are sorted, the pooled branch samples are quantile-resampled to the
/// matrix count, and the sup and mean absolute gaps come back.
pub fn distribution_discrepancy(
    matrix_values: &[f64],
    branches: &[Vec<f64>],
) -> Result<Discrepancy> {
    let mut values = matrix_values.to_vec();
    values.sort_by(f64::total_cmp);
    let mut pool: Vec<f64> = branches.iter().flatten().copied().collect();
    pool.sort_by(f64::total_cmp);
    if values.is_empty() || pool.is_empty() {
        return Err(Error::InvalidArgument(
            "distribution comparison needs non-empty samples on both sides".into(),
        ));
    }
    let resampled = resample_sorted(&pool, values.len());
    let mut sup = 0.0f64;
    let mut total = 0.0;
    for (v, s) in values.iter().zip(&resampled) {
        let d = (v - s).abs();
        sup = sup.max(d);
        total += d;
    }
    Ok(Discrepancy { sup, mean: total / values.len() as f64 })
}

/// One matrix-versus-symbol comparison, ready for serialization: the
/// sorted matrix spectrum, the branch samples resampled to the same
/// count, and the discrepancy between them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub label: String,
    pub n: usize,
    pub params: PhysicalParams,
    pub matrix_values: Vec<f64>,
    pub symbol_values: Vec<f64>,
    pub sup_discrepancy: f64,
    pub mean_discrepancy: f64,
}

impl SpectrumReport {
    pub fn new(
        label: impl Into<String>,
        n: usize,
        params: PhysicalParams,
        matrix_values: Vec<f64>,
        branches: &[Vec<f64>],
    ) -> Result<Self> {
        let disc = distribution_discrepancy(&matrix_values, branches)?;
        let mut values = matrix_values;
        values.sort_by(f64::total_cmp);
        let mut pool: Vec<f64> = branches.iter().flatten().copied().collect();
        pool.sort_by(f64::total_cmp);
        let symbol_values = resample_sorted(&pool, values.len());
        Ok(SpectrumReport {
            label: label.into(),
            n,
            params,
            matrix_values: values,
            symbol_values,
            sup_discrepancy: disc.sup,
            mean_discrepancy: disc.mean,
        })
    }
}

/// How [`schur_complement`] delivers its result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchurMode {
    /// Form the dense matrix `(1/dt) E - D N^{-1} (1/dt) G` explicitly.
    ExactDense,
    /// Keep the momentum factorization and apply the complement lazily.
    InnerSolve,
}

pub enum SchurComplement {
    Dense(DMatrix<f64>),
    Operator(SchurProduct),
}

/// Lazily applied Schur complement: the momentum block is factored once,
/// each apply costs two block matvecs and one pair of triangular solves.
pub struct SchurProduct {
    penalty_scaled: DMatrix<f64>,
    divergence: DMatrix<f64>,
    gradient_scaled: DMatrix<f64>,
    momentum_lu: RealLu,
}

impl SchurProduct {
    pub fn dim(&self) -> usize {
        self.penalty_scaled.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let inner = self
            .momentum_lu
            .solve(&(&self.gradient_scaled * x))
            .expect("factorization verified at construction");
        &self.penalty_scaled * x - &self.divergence * inner
    }
}

/// Column-scaled pressure Schur complement of the assembled system.
pub fn schur_complement(sys: &SaddleSystem, mode: SchurMode) -> Result<SchurComplement> {
    let nu = sys.n_velocity();
    if nu > DENSE_EIGEN_LIMIT {
        return Err(Error::DenseThreshold { dim: nu, threshold: DENSE_EIGEN_LIMIT });
    }
    let inv_dt = 1.0 / sys.grid.dt();
    let lu = sys.momentum.to_dense().lu();
    if !lu.is_invertible() {
        return Err(Error::InvalidArgument("momentum block is singular".into()));
    }
    let gradient_scaled = sys.gradient.to_dense() * inv_dt;
    let penalty_scaled = sys.penalty.to_dense() * inv_dt;
    let divergence = sys.divergence.to_dense();
    match mode {
        SchurMode::ExactDense => {
            let inner = lu
                .solve(&gradient_scaled)
                .ok_or_else(|| Error::InvalidArgument("momentum block is singular".into()))?;
            Ok(SchurComplement::Dense(penalty_scaled - divergence * inner))
        }
        SchurMode::InnerSolve => Ok(SchurComplement::Operator(SchurProduct {
            penalty_scaled,
            divergence,
            gradient_scaled,
            momentum_lu: lu,
        })),
    }
}

/// Least-squares fit of `|lambda| = c * theta^gamma` on log-log axes.
/// Returns `(c, gamma)`.
pub fn fit_power_law(thetas: &[f64], magnitudes: &[f64]) -> Result<(f64, f64)> {
    if thetas.len() != magnitudes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies vs {} magnitudes",
            thetas.len(),
            magnitudes.len()
        )));
    }
    if thetas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least three samples, got {}",
            thetas.len()
        )));
    }
    if thetas.iter().chain(magnitudes).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "power-law fit needs strictly positive finite samples".into(),
        ));
    }
    let m = thetas.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in thetas.iter().zip(magnitudes) {
        let x = t.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = m * sxx - sx * sx;
    let denom_scale = (m * sxx).abs().max(sx * sx).max(f64::MIN_POSITIVE);
    if denom.abs() <= 1e-12 * denom_scale {
        return Err(Error::InvalidArgument(
            "power-law fit needs at least two distinct frequencies".into(),
        ));
    }
    let gamma = (m * sxy - sx * sy) / denom;
    let intercept = (sy - gamma * sx) / m;
    Ok((intercept.exp(), gamma))
}

/// Index permutation that interleaves the `[all velocity; all pressure]`
/// layout into per-cell groups of `k` velocity plus `q` pressure unknowns:
/// entry `i` of the result is the source index the permuted position `i`
/// reads from, so `permuted[i][j] = a[perm[i]][perm[j]]`.
pub fn interleaving_permutation(cells: usize, k: usize, q: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(cells * (k + q));
    for j in 0..cells {
        perm.extend((0..k).map(|t| j * k + t));
        perm.extend((0..q).map(|t| cells * k + j * q + t));
    }
    perm
}

/// The saddle matrix after the block-Toeplitz-revealing permutation.
pub struct BlockToeplitzForm {
    /// Source index per permuted position.
    pub permutation: Vec<usize>,
    /// Column-scaled dense matrix trimmed to `n` velocity cells.
    pub trimmed: DMatrix<f64>,
    /// `P * trimmed * P^T`: per-cell blocks of size `block_size`.
    pub permuted: DMatrix<f64>,
    pub block_size: usize,
}

/// Builds the permutation similarity turning the column-scaled saddle
/// matrix into a single block Toeplitz layout.  The staggering leaves one
/// more velocity cell than pressure cells, so the trailing velocity cell
/// is trimmed before pairing cell by cell.
pub fn permute_to_block_toeplitz(sys: &SaddleSystem) -> Result<BlockToeplitzForm> {
    let cells = sys.grid.n();
    let nu = sys.n_velocity();
    let np = sys.n_pressure();
    if nu % sys.grid.n_dual() != 0 || np % cells != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{nu} velocity and {np} pressure unknowns do not split into per-cell blocks"
        )));
    }
    let k = nu / sys.grid.n_dual();
    let q = np / cells;
    let full = sys.scaled_dense();
    let keep: Vec<usize> = (0..cells * k).chain(nu..nu + np).collect();
    let trimmed = DMatrix::from_fn(keep.len(), keep.len(), |i, j| full[(keep[i], keep[j])]);
    let permutation = interleaving_permutation(cells, k, q);
    let permuted = DMatrix::from_fn(keep.len(), keep.len(), |i, j| {
        trimmed[(permutation[i], permutation[j])]
    });
    Ok(BlockToeplitzForm { permutation, trimmed, permuted, block_size: k + q })
}
