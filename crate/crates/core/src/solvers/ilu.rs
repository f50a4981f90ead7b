//! Incomplete LU factorization with zero fill-in on the sparsity pattern of
//! the input matrix, used to precondition the momentum solves.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

use super::krylov::Preconditioner;

/// ILU(0) factors stored in place on the original CSR pattern: strictly
/// lower entries hold L (unit diagonal implied), the diagonal and upper
/// entries hold U.
#[derive(Debug)]
pub struct Ilu0 {
    nrows: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    diag_pos: Vec<usize>,
}

/// Factors a square CSR matrix, keeping only entries inside its own
/// pattern.  Rows must contain their diagonal; a vanishing pivot aborts the
/// factorization.
pub fn ilu0(a: &CsrMatrix) -> Result<Ilu0> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch(format!(
            "ILU(0) needs a square matrix, got {}x{}",
            a.nrows, a.ncols
        )));
    }
    let n = a.nrows;
    let mut values = a.values.clone();
    let mut diag_pos = vec![usize::MAX; n];

    // Column-to-position map of the current row, rebuilt as the elimination
    // walks down the matrix.
    let mut col_pos: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let (start, end) = (a.indptr[i], a.indptr[i + 1]);
        col_pos.clear();
        for p in start..end {
            col_pos.insert(a.indices[p], p);
        }
        // Columns are sorted, so this loop visits k < i in order, as the
        // IKJ elimination requires.
        for p in start..end {
            let k = a.indices[p];
            if k >= i {
                break;
            }
            let pivot = values[diag_pos[k]];
            if pivot.abs() < 1e-300 {
                return Err(Error::ZeroPivot { row: k });
            }
            let lik = values[p] / pivot;
            values[p] = lik;
            // Subtract lik * U(k, j) for the j in row k beyond the diagonal
            // that also live in row i's pattern.
            for q in diag_pos[k] + 1..a.indptr[k + 1] {
                if let Some(&pos) = col_pos.get(&a.indices[q]) {
                    values[pos] -= lik * values[q];
                }
            }
        }
        match col_pos.get(&i) {
            Some(&pos) => diag_pos[i] = pos,
            None => return Err(Error::ZeroPivot { row: i }),
        }
        if values[diag_pos[i]].abs() < 1e-300 {
            return Err(Error::ZeroPivot { row: i });
        }
    }
    Ok(Ilu0 { nrows: n, indptr: a.indptr.clone(), indices: a.indices.clone(), values, diag_pos })
}

impl Ilu0 {
    /// Applies the factored inverse: forward substitution through unit L,
    /// backward through U.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "ILU(0) solve: matrix is {}x{} but vector has length {}",
                self.nrows,
                self.nrows,
                b.len()
            )));
        }
        let mut x = b.clone();
        for i in 0..self.nrows {
            let mut acc = x[i];
            for p in self.indptr[i]..self.diag_pos[i] {
                acc -= self.values[p] * x[self.indices[p]];
            }
            x[i] = acc;
        }
        for i in (0..self.nrows).rev() {
            let mut acc = x[i];
            for p in self.diag_pos[i] + 1..self.indptr[i + 1] {
                acc -= self.values[p] * x[self.indices[p]];
            }
            x[i] = acc / self.values[self.diag_pos[i]];
        }
        Ok(x)
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve(r)
    }
}
