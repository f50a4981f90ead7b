//! Block-sparse and scalar-sparse matrix containers.
//!
//! The discrete operators are block-banded: every nonzero is a dense
//! `s × q` block sitting at a block coordinate, with at most a handful of
//! blocks per block row (the stencils couple nearest neighbours only).
//! [`BlockMatrix`] stores exactly that — a map from block column to dense
//! block, per block row — which keeps assembly natural and makes the
//! block-Toeplitz structure trivially inspectable.  Scalar CSR
//! ([`CsrMatrix`]) exists for the incomplete factorization, which does not
//! care about block boundaries.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sparse matrix of dense blocks.  All blocks share one shape
/// (`row_block × col_block`); block rows hold their blocks sorted by block
/// column.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    block_rows: usize,
    block_cols: usize,
    row_block: usize,
    col_block: usize,
    rows: Vec<BTreeMap<usize, DMatrix<f64>>>,
}

impl BlockMatrix {
    /// Empty matrix with `block_rows × block_cols` block slots of shape
    /// `row_block × col_block`.
    pub fn zeros(block_rows: usize, block_cols: usize, row_block: usize, col_block: usize) -> Self {
        Self {
            block_rows,
            block_cols,
            row_block,
            col_block,
            rows: vec![BTreeMap::new(); block_rows],
        }
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn row_block_size(&self) -> usize {
        self.row_block
    }

    pub fn col_block_size(&self) -> usize {
        self.col_block
    }

    pub fn nrows(&self) -> usize {
        self.block_rows * self.row_block
    }

    pub fn ncols(&self) -> usize {
        self.block_cols * self.col_block
    }

    /// Accumulates `block` into block slot `(bi, bj)`.
    ///
    /// # Panics
    /// If the coordinate is out of range or the block shape disagrees with
    /// the matrix's block shape.
    pub fn add_block(&mut self, bi: usize, bj: usize, block: &DMatrix<f64>) {
        assert!(bi < self.block_rows && bj < self.block_cols, "block index out of range");
        assert_eq!((block.nrows(), block.ncols()), (self.row_block, self.col_block));
        match self.rows[bi].get_mut(&bj) {
            Some(existing) => *existing += block,
            None => {
                self.rows[bi].insert(bj, block.clone());
            }
        }
    }

    /// Adds `value` to the scalar entry `(i, j)` (global indices).
    pub fn add_entry(&mut self, i: usize, j: usize, value: f64) {
        let (bi, li) = (i / self.row_block, i % self.row_block);
        let (bj, lj) = (j / self.col_block, j % self.col_block);
        assert!(bi < self.block_rows && bj < self.block_cols, "entry out of range");
        let block = self
            .rows[bi]
            .entry(bj)
            .or_insert_with(|| DMatrix::zeros(self.row_block, self.col_block));
        block[(li, lj)] += value;
    }

    /// The block at `(bi, bj)`, if present.
    pub fn block(&self, bi: usize, bj: usize) -> Option<&DMatrix<f64>> {
        self.rows.get(bi).and_then(|r| r.get(&bj))
    }

    /// Iterator over `(bi, bj, block)` in row-major order.
    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &DMatrix<f64>)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(bi, row)| row.iter().map(move |(&bj, block)| (bi, bj, block)))
    }

    /// Replaces every block in block row `bi` with zeros (removes them).
    pub fn clear_block_row(&mut self, bi: usize) {
        self.rows[bi].clear();
    }

    /// Zeroes scalar row `i` across all blocks, keeping the structure.
    pub fn zero_row(&mut self, i: usize) {
        let (bi, li) = (i / self.row_block, i % self.row_block);
        for block in self.rows[bi].values_mut() {
            for lj in 0..self.col_block {
                block[(li, lj)] = 0.0;
            }
        }
    }

    /// Scalar entry lookup (zero when the block is absent).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (bi, li) = (i / self.row_block, i % self.row_block);
        let (bj, lj) = (j / self.col_block, j % self.col_block);
        self.block(bi, bj).map_or(0.0, |b| b[(li, lj)])
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols(), "matvec dimension mismatch");
        let mut y = DVector::zeros(self.nrows());
        self.matvec_add(x, &mut y, 1.0);
        y
    }

    /// `y += scale * self * x`.
    pub fn matvec_add(&self, x: &DVector<f64>, y: &mut DVector<f64>, scale: f64) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        for (bi, row) in self.rows.iter().enumerate() {
            let base_i = bi * self.row_block;
            for (&bj, block) in row {
                let base_j = bj * self.col_block;
                for li in 0..self.row_block {
                    let mut acc = 0.0;
                    for lj in 0..self.col_block {
                        acc += block[(li, lj)] * x[base_j + lj];
                    }
                    y[base_i + li] += scale * acc;
                }
            }
        }
    }

    /// `y = self^T * x`.
    pub fn matvec_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows(), "transpose matvec dimension mismatch");
        let mut y = DVector::zeros(self.ncols());
        for (bi, row) in self.rows.iter().enumerate() {
            let base_i = bi * self.row_block;
            for (&bj, block) in row {
                let base_j = bj * self.col_block;
                for li in 0..self.row_block {
                    let xi = x[base_i + li];
                    if xi == 0.0 {
                        continue;
                    }
                    for lj in 0..self.col_block {
                        y[base_j + lj] += block[(li, lj)] * xi;
                    }
                }
            }
        }
        y
    }

    /// Dense copy.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        for (bi, bj, block) in self.iter_blocks() {
            out.view_mut((bi * self.row_block, bj * self.col_block), (self.row_block, self.col_block))
                .copy_from(block);
        }
        out
    }

    /// Materialized transpose.
    pub fn transpose(&self) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(self.block_cols, self.block_rows, self.col_block, self.row_block);
        for (bi, bj, block) in self.iter_blocks() {
            out.add_block(bj, bi, &block.transpose());
        }
        out
    }

    /// In-place scaling of every stored block.
    pub fn scale(&mut self, factor: f64) {
        for row in &mut self.rows {
            for block in row.values_mut() {
                *block *= factor;
            }
        }
    }

    /// Sum of another block matrix with identical layout, scaled.
    pub fn add_scaled(&mut self, other: &BlockMatrix, factor: f64) -> Result<()> {
        if (self.block_rows, self.block_cols, self.row_block, self.col_block)
            != (other.block_rows, other.block_cols, other.row_block, other.col_block)
        {
            return Err(Error::DimensionMismatch(format!(
                "block layout {}x{} ({}x{} blocks) vs {}x{} ({}x{} blocks)",
                self.block_rows, self.block_cols, self.row_block, self.col_block,
                other.block_rows, other.block_cols, other.row_block, other.col_block,
            )));
        }
        for (bi, bj, block) in other.iter_blocks() {
            let mut scaled = block.clone();
            scaled *= factor;
            self.add_block(bi, bj, &scaled);
        }
        Ok(())
    }

    /// CSR view of the scalar matrix, dropping exact zeros inside blocks.
    pub fn to_csr(&self) -> CsrMatrix {
        let nrows = self.nrows();
        let ncols = self.ncols();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for bi in 0..self.block_rows {
            for li in 0..self.row_block {
                for (&bj, block) in &self.rows[bi] {
                    let base_j = bj * self.col_block;
                    for lj in 0..self.col_block {
                        let v = block[(li, lj)];
                        if v != 0.0 {
                            indices.push(base_j + lj);
                            values.push(v);
                        }
                    }
                }
                indptr.push(indices.len());
            }
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }
}

/// Compressed sparse row matrix over `f64`.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
        y
    }

    /// Value at `(i, j)` (zero if not stored).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        for k in self.indptr[i]..self.indptr[i + 1] {
            if self.indices[k] == j {
                return self.values[k];
            }
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_by_two(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn accumulates_blocks_and_matches_dense_matvec() {
        let mut m = BlockMatrix::zeros(3, 3, 2, 2);
        m.add_block(0, 0, &two_by_two(1.0, 2.0, 3.0, 4.0));
        m.add_block(0, 0, &two_by_two(1.0, 0.0, 0.0, 1.0));
        m.add_block(1, 2, &two_by_two(-1.0, 0.5, 0.0, 2.0));
        m.add_block(2, 1, &two_by_two(0.0, 1.0, 1.0, 0.0));

        let x = DVector::from_iterator(6, (0..6).map(|k| k as f64 + 1.0));
        let dense = m.to_dense();
        let y = m.matvec(&x);
        let y_dense = &dense * &x;
        assert_abs_diff_eq!(y, y_dense, epsilon = 1e-14);

        let z = DVector::from_iterator(6, (0..6).map(|k| (k as f64).sin()));
        assert_abs_diff_eq!(m.matvec_transpose(&z), dense.transpose() * &z, epsilon = 1e-14);
    }

    #[test]
    fn transpose_swaps_block_shape() {
        let mut m = BlockMatrix::zeros(2, 3, 4, 2);
        m.add_block(1, 0, &DMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64));
        let t = m.transpose();
        assert_eq!((t.block_rows(), t.block_cols()), (3, 2));
        assert_eq!((t.row_block_size(), t.col_block_size()), (2, 4));
        assert_abs_diff_eq!(t.to_dense(), m.to_dense().transpose(), epsilon = 0.0);
    }

    #[test]
    fn zero_row_clears_across_blocks() {
        let mut m = BlockMatrix::zeros(2, 2, 2, 2);
        m.add_block(0, 0, &two_by_two(1.0, 2.0, 3.0, 4.0));
        m.add_block(0, 1, &two_by_two(5.0, 6.0, 7.0, 8.0));
        m.zero_row(1);
        let dense = m.to_dense();
        for j in 0..4 {
            assert_eq!(dense[(1, j)], 0.0);
        }
        assert_eq!(dense[(0, 0)], 1.0);
        assert_eq!(dense[(0, 3)], 6.0);
    }

    #[test]
    fn csr_round_trip_matches_dense() {
        let mut m = BlockMatrix::zeros(3, 2, 2, 3);
        m.add_block(0, 1, &DMatrix::from_fn(2, 3, |i, j| if (i + j) % 2 == 0 { 1.5 } else { 0.0 }));
        m.add_block(2, 0, &DMatrix::from_fn(2, 3, |i, j| i as f64 - j as f64));
        let csr = m.to_csr();
        let dense = m.to_dense();
        // Stored zeros are dropped, values agree entry by entry.
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                assert_eq!(csr.entry(i, j), dense[(i, j)]);
            }
        }
        let x = DVector::from_iterator(6, (0..6).map(|k| 0.5 * k as f64 - 1.0));
        assert_abs_diff_eq!(csr.matvec(&x), &dense * &x, epsilon = 1e-14);
    }

    #[test]
    fn add_scaled_rejects_layout_mismatch() {
        let mut a = BlockMatrix::zeros(2, 2, 2, 2);
        let b = BlockMatrix::zeros(2, 2, 3, 2);
        assert!(a.add_scaled(&b, 1.0).is_err());
    }
}
