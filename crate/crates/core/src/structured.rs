//! Block Toeplitz and block circulant matrices generated by matrix symbols.
//!
//! A symbol is a matrix-valued function of the frequency `theta`.  Banded
//! block Toeplitz matrices come from trigonometric polynomials
//! `f(theta) = sum_k t_k e^{i k theta}` (the `t_k` are the block diagonals);
//! block circulants are built by sampling any symbol at the `n`-th roots of
//! unity, `B_r = f(2 pi r / n)`.  For a trigonometric polynomial that
//! sampling and the aliased-coefficient circulant are the same matrix, so
//! one construction covers both the banded operators and the rational
//! symbols that only exist pointwise.
//!
//! A block circulant diagonalizes as `C = (F^H (x) I) diag(B_r) (F (x) I)`
//! with `F[r, j] = e^{2 pi i r j / n} / sqrt(n)`, so applying or inverting
//! it costs `s` FFTs of length `n` each way plus one small dense solve per
//! frequency.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Matrix-valued symbol: either a trigonometric polynomial with stored
/// coefficients, or a general pointwise evaluator.  Blocks may be
/// rectangular (the discrete gradient maps pressure blocks to velocity
/// blocks); circulants require square ones.
pub enum BlockSymbol {
    TrigPolynomial {
        nrows: usize,
        ncols: usize,
        coeffs: BTreeMap<i64, DMatrix<Complex64>>,
    },
    General {
        nrows: usize,
        ncols: usize,
        eval: Box<dyn Fn(f64) -> DMatrix<Complex64>>,
    },
}

impl BlockSymbol {
    /// Symbol from Fourier coefficients; entries with the same offset are
    /// summed.
    pub fn from_coefficients(
        nrows: usize,
        ncols: usize,
        coeffs: impl IntoIterator<Item = (i64, DMatrix<Complex64>)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<i64, DMatrix<Complex64>> = BTreeMap::new();
        for (k, c) in coeffs {
            if c.nrows() != nrows || c.ncols() != ncols {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient at offset {k} is {}x{}, symbol blocks are {nrows}x{ncols}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            match map.get_mut(&k) {
                Some(existing) => *existing += c,
                None => {
                    map.insert(k, c);
                }
            }
        }
        Ok(BlockSymbol::TrigPolynomial { nrows, ncols, coeffs: map })
    }

    /// Convenience constructor for real coefficients.
    pub fn from_real_coefficients(
        nrows: usize,
        ncols: usize,
        coeffs: impl IntoIterator<Item = (i64, DMatrix<f64>)>,
    ) -> Result<Self> {
        Self::from_coefficients(
            nrows,
            ncols,
            coeffs
                .into_iter()
                .map(|(k, c)| (k, c.map(|v| Complex64::new(v, 0.0)))),
        )
    }

    /// Symbol defined only pointwise (rational symbols, Schur complements).
    pub fn from_fn(
        nrows: usize,
        ncols: usize,
        eval: impl Fn(f64) -> DMatrix<Complex64> + 'static,
    ) -> Self {
        BlockSymbol::General { nrows, ncols, eval: Box::new(eval) }
    }

    pub fn nrows(&self) -> usize {
        match self {
            BlockSymbol::TrigPolynomial { nrows, .. } | BlockSymbol::General { nrows, .. } => {
                *nrows
            }
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            BlockSymbol::TrigPolynomial { ncols, .. } | BlockSymbol::General { ncols, .. } => {
                *ncols
            }
        }
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    /// Value at frequency `theta`.
    pub fn eval(&self, theta: f64) -> DMatrix<Complex64> {
        match self {
            BlockSymbol::TrigPolynomial { nrows, ncols, coeffs } => {
                let mut out = DMatrix::zeros(*nrows, *ncols);
                for (&k, c) in coeffs {
                    let phase = Complex64::from_polar(1.0, k as f64 * theta);
                    out += c * phase;
                }
                out
            }
            BlockSymbol::General { eval, .. } => eval(theta),
        }
    }

    /// Fourier coefficient at offset `k`; `None` when the symbol is only
    /// known pointwise.
    pub fn coefficient(&self, k: i64) -> Option<DMatrix<Complex64>> {
        match self {
            BlockSymbol::TrigPolynomial { nrows, ncols, coeffs } => Some(
                coeffs
                    .get(&k)
                    .cloned()
                    .unwrap_or_else(|| DMatrix::zeros(*nrows, *ncols)),
            ),
            BlockSymbol::General { .. } => None,
        }
    }

    /// Largest |offset| with a stored coefficient, for banded symbols.
    pub fn bandwidth(&self) -> Option<i64> {
        match self {
            BlockSymbol::TrigPolynomial { coeffs, .. } => {
                coeffs.keys().map(|k| k.abs()).max().or(Some(0))
            }
            BlockSymbol::General { .. } => None,
        }
    }
}

/// Dense block Toeplitz matrix `[t_{j-k}]` with `n x n` blocks, from a
/// trigonometric-polynomial symbol.
pub fn toeplitz_from_symbol(symbol: &BlockSymbol, n: usize) -> Result<DMatrix<Complex64>> {
    let BlockSymbol::TrigPolynomial { nrows, ncols, coeffs } = symbol else {
        return Err(Error::InvalidArgument(
            "Toeplitz construction needs stored Fourier coefficients".into(),
        ));
    };
    let (s, q) = (*nrows, *ncols);
    let mut out = DMatrix::zeros(n * s, n * q);
    for (&k, c) in coeffs {
        for j in 0..n {
            let col = j as i64 - k;
            if (0..n as i64).contains(&col) {
                out.view_mut((j * s, col as usize * q), (s, q)).copy_from(c);
            }
        }
    }
    Ok(out)
}

/// Leading `k x k` principal submatrix.
pub fn leading_principal_submatrix(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    m.view((0, 0), (k, k)).clone_owned()
}

/// Real part of a complex matrix, failing loudly if anything imaginary is
/// actually there.
pub fn real_part_checked(m: &DMatrix<Complex64>, tol: f64) -> Result<DMatrix<f64>> {
    let worst = m.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    if worst > tol {
        return Err(Error::InvalidArgument(format!(
            "matrix has imaginary entries up to {worst:.3e} (tolerance {tol:.3e})"
        )));
    }
    Ok(m.map(|z| z.re))
}

/// Eigenvalues of a small dense complex matrix via its Schur form.
pub fn complex_matrix_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let amax = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if amax == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); m.nrows()]);
    }
    let lower_max = (1..m.nrows())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .fold(0.0, f64::max);
    if lower_max == 0.0 {
        return Ok(m.diagonal().iter().copied().collect());
    }
    // Normalizing keeps the iteration's relative convergence test meaningful
    // for symbols whose entries are uniformly tiny near a frequency.
    let scale = Complex64::new(1.0 / amax, 0.0);
    let schur = nalgebra::linalg::Schur::try_new(m * scale, 1e-14, 10_000)
        .ok_or_else(|| Error::InvalidArgument("Schur iteration did not converge".into()))?;
    let eigs = schur
        .eigenvalues()
        .ok_or_else(|| Error::InvalidArgument("Schur form yielded no eigenvalues".into()))?;
    Ok(eigs.iter().map(|z| z * amax).collect())
}

type ComplexLu = nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>;

/// Block circulant matrix held in frequency space: one `s x s` block per
/// frequency `theta_r = 2 pi r / n`.
pub struct BlockCirculant {
    n: usize,
    s: usize,
    freq_blocks: Vec<DMatrix<Complex64>>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    factors: OnceCell<Vec<ComplexLu>>,
}

impl BlockCirculant {
    /// Samples `symbol` at the `n` circulant frequencies.
    pub fn from_symbol(symbol: &BlockSymbol, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("circulant needs n >= 1".into()));
        }
        if !symbol.is_square() {
            return Err(Error::InvalidArgument(format!(
                "circulants need a square symbol, got {}x{} blocks",
                symbol.nrows(),
                symbol.ncols()
            )));
        }
        let blocks = (0..n)
            .map(|r| symbol.eval(2.0 * std::f64::consts::PI * r as f64 / n as f64))
            .collect();
        Self::from_frequency_blocks(blocks)
    }

    /// Wraps explicitly given frequency blocks.
    pub fn from_frequency_blocks(freq_blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let n = freq_blocks.len();
        if n == 0 {
            return Err(Error::InvalidArgument("circulant needs n >= 1".into()));
        }
        let s = freq_blocks[0].nrows();
        for (r, b) in freq_blocks.iter().enumerate() {
            if b.nrows() != s || b.ncols() != s {
                return Err(Error::DimensionMismatch(format!(
                    "frequency block {r} is {}x{}, expected {s}x{s}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let mut planner = FftPlanner::new();
        Ok(BlockCirculant {
            n,
            s,
            freq_blocks,
            fft_forward: planner.plan_fft(n, FftDirection::Forward),
            fft_inverse: planner.plan_fft(n, FftDirection::Inverse),
            factors: OnceCell::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.n * self.s
    }

    pub fn frequency_block(&self, r: usize) -> &DMatrix<Complex64> {
        &self.freq_blocks[r]
    }

    /// Adds a correction to one frequency block (rank corrections to the
    /// circulant live on single frequencies) and drops cached factors.
    pub fn add_to_frequency_block(&mut self, r: usize, delta: &DMatrix<Complex64>) -> Result<()> {
        if delta.nrows() != self.s || delta.ncols() != self.s {
            return Err(Error::DimensionMismatch(format!(
                "correction is {}x{}, block size is {}",
                delta.nrows(),
                delta.ncols(),
                self.s
            )));
        }
        self.freq_blocks[r] += delta;
        self.factors = OnceCell::new();
        Ok(())
    }

    /// All eigenvalues: the union of the frequency-block eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.freq_blocks {
            out.extend(complex_matrix_eigenvalues(b)?);
        }
        Ok(out)
    }

    /// Time-domain block `t_m = (1/n) sum_r B_r e^{-i theta_r m}`.
    pub fn time_block(&self, m: i64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.s, self.s);
        for (r, b) in self.freq_blocks.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * r as f64 / self.n as f64;
            out += b * Complex64::from_polar(1.0 / self.n as f64, -theta * m as f64);
        }
        out
    }

    /// Dense time-domain matrix; for inspection and tests.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let s = self.s;
        let blocks: Vec<DMatrix<Complex64>> =
            (0..self.n).map(|m| self.time_block(m as i64)).collect();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.n {
            for k in 0..self.n {
                let m = (j + self.n - k) % self.n;
                out.view_mut((j * s, k * s), (s, s)).copy_from(&blocks[m]);
            }
        }
        out
    }

    /// One FFT per vector component, scaled by `1/sqrt(n)`; `buf` holds `n`
    /// blocks of `s`.
    fn transform(&self, buf: &mut [Complex64], direction: FftDirection) {
        let fft = match direction {
            FftDirection::Forward => &self.fft_forward,
            FftDirection::Inverse => &self.fft_inverse,
        };
        let scale = 1.0 / (self.n as f64).sqrt();
        let mut lane = vec![Complex64::new(0.0, 0.0); self.n];
        for comp in 0..self.s {
            for j in 0..self.n {
                lane[j] = buf[j * self.s + comp];
            }
            fft.process(&mut lane);
            for j in 0..self.n {
                buf[j * self.s + comp] = lane[j] * scale;
            }
        }
    }

    pub fn apply_complex(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(x.len(), self.dim(), "circulant apply dimension mismatch");
        let mut buf: Vec<Complex64> = x.iter().copied().collect();
        self.transform(&mut buf, FftDirection::Inverse);
        for (r, b) in self.freq_blocks.iter().enumerate() {
            let seg = DVector::from_column_slice(&buf[r * self.s..(r + 1) * self.s]);
            let out = b * seg;
            buf[r * self.s..(r + 1) * self.s].copy_from_slice(out.as_slice());
        }
        self.transform(&mut buf, FftDirection::Forward);
        DVector::from_vec(buf)
    }

    pub fn solve_complex(&self, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        assert_eq!(rhs.len(), self.dim(), "circulant solve dimension mismatch");
        let factors = self.factors.get_or_init(|| {
            self.freq_blocks.iter().map(|b| ComplexLu::new(b.clone())).collect()
        });
        let mut buf: Vec<Complex64> = rhs.iter().copied().collect();
        self.transform(&mut buf, FftDirection::Inverse);
        for (r, lu) in factors.iter().enumerate() {
            let seg = DVector::from_column_slice(&buf[r * self.s..(r + 1) * self.s]);
            let out = lu
                .solve(&seg)
                .ok_or(Error::SingularFrequencyBlock { index: r })?;
            buf[r * self.s..(r + 1) * self.s].copy_from_slice(out.as_slice());
        }
        self.transform(&mut buf, FftDirection::Forward);
        Ok(DVector::from_vec(buf))
    }

    /// Real-vector apply; valid because every symbol here generates a real
    /// time-domain matrix (`f(-theta)` is the conjugate of `f(theta)`).
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.apply_complex(&x.map(|v| Complex64::new(v, 0.0)));
        z.map(|v| v.re)
    }

    /// Real-vector solve; see [`apply`](Self::apply).
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.solve_complex(&rhs.map(|v| Complex64::new(v, 0.0)))?;
        Ok(z.map(|v| v.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    /// `2 - 2 cos(theta)`: the 1D Laplacian stencil symbol.
    fn laplacian_symbol() -> BlockSymbol {
        BlockSymbol::from_real_coefficients(
            1,
            1,
            [(-1, scalar(-1.0)), (0, scalar(2.0)), (1, scalar(-1.0))],
        )
        .unwrap()
    }

    #[test]
    fn circulant_frequencies_of_the_laplacian_stencil() {
        let c = BlockCirculant::from_symbol(&laplacian_symbol(), 4).unwrap();
        let got: Vec<f64> = (0..4).map(|r| c.frequency_block(r)[(0, 0)].re).collect();
        let want = [0.0, 2.0, 4.0, 2.0];
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-14);
        }
        // Same multiset from the eigenvalue routine.
        let mut eigs: Vec<f64> = c.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        eigs.sort_by(f64::total_cmp);
        for (g, w) in eigs.iter().zip(&[0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-13);
        }
    }

    #[test]
    fn circulant_time_blocks_wrap_the_stencil() {
        let c = BlockCirculant::from_symbol(&laplacian_symbol(), 4).unwrap();
        assert_abs_diff_eq!(c.time_block(0)[(0, 0)].re, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c.time_block(1)[(0, 0)].re, -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c.time_block(2)[(0, 0)].re, 0.0, epsilon = 1e-13);
        let dense = real_part_checked(&c.to_dense(), 1e-12).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.0, -1.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                -1.0, 0.0, -1.0, 2.0,
            ],
        );
        assert_abs_diff_eq!(dense, want, epsilon = 1e-13);
    }

    #[test]
    fn toeplitz_from_the_same_symbol_is_banded() {
        let t = toeplitz_from_symbol(&laplacian_symbol(), 4).unwrap();
        let dense = real_part_checked(&t, 0.0).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.0, 0.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                0.0, 0.0, -1.0, 2.0,
            ],
        );
        assert_abs_diff_eq!(dense, want, epsilon = 0.0);
    }

    #[test]
    fn toeplitz_needs_coefficients() {
        let general = BlockSymbol::from_fn(1, 1, |theta| {
            DMatrix::from_element(1, 1, Complex64::new(2.0 - 2.0 * theta.cos(), 0.0))
        });
        assert!(toeplitz_from_symbol(&general, 4).is_err());
    }

    #[test]
    fn sampling_a_polynomial_symbol_pointwise_matches_its_coefficients() {
        let poly = laplacian_symbol();
        let general = BlockSymbol::from_fn(1, 1, |theta| {
            DMatrix::from_element(1, 1, Complex64::new(2.0 - 2.0 * theta.cos(), 0.0))
        });
        let a = BlockCirculant::from_symbol(&poly, 7).unwrap();
        let b = BlockCirculant::from_symbol(&general, 7).unwrap();
        for r in 0..7 {
            assert_abs_diff_eq!(
                a.frequency_block(r)[(0, 0)].re,
                b.frequency_block(r)[(0, 0)].re,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn solve_inverts_apply_for_a_shifted_stencil() {
        // 4 - 2 cos(theta) stays away from zero, so every frequency block is
        // invertible.
        let sym = BlockSymbol::from_real_coefficients(
            1,
            1,
            [(-1, scalar(-1.0)), (0, scalar(4.0)), (1, scalar(-1.0))],
        )
        .unwrap();
        let c = BlockCirculant::from_symbol(&sym, 12).unwrap();
        let x = DVector::from_fn(12, |k, _| (k as f64 * 0.7).sin());
        let y = c.apply(&x);
        let back = c.solve(&y).unwrap();
        assert_abs_diff_eq!(back, x, epsilon = 1e-12);
    }

    #[test]
    fn singular_frequency_block_is_reported_by_index() {
        // The zero frequency of the Laplacian stencil vanishes.
        let c = BlockCirculant::from_symbol(&laplacian_symbol(), 8).unwrap();
        let rhs = DVector::from_element(8, 1.0);
        match c.solve(&rhs) {
            Err(Error::SingularFrequencyBlock { index }) => assert_eq!(index, 0),
            other => panic!("expected a singular-block error, got {other:?}"),
        }
    }

    #[test]
    fn rank_correction_on_one_frequency_restores_solvability() {
        let mut c = BlockCirculant::from_symbol(&laplacian_symbol(), 8).unwrap();
        // Trigger and cache a factorization first, so the correction must
        // also invalidate it.
        assert!(c.solve(&DVector::from_element(8, 1.0)).is_err());
        c.add_to_frequency_block(0, &DMatrix::from_element(1, 1, Complex64::new(0.5, 0.0)))
            .unwrap();
        let x = DVector::from_fn(8, |k, _| 1.0 / (k as f64 + 1.0));
        let y = c.apply(&x);
        let back = c.solve(&y).unwrap();
        assert_abs_diff_eq!(back, x, epsilon = 1e-12);
        // The corrected zero-frequency eigenvalue moved to 0.5.
        let mut eigs: Vec<f64> = c.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        eigs.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(eigs[0], 0.5, epsilon = 1e-13);
    }

    #[test]
    fn block_valued_circulant_matches_dense_arithmetic() {
        let t0 = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 4.0]);
        let t1 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.5, 0.0]);
        let sym = BlockSymbol::from_real_coefficients(
            2,
            2,
            [(0, t0), (1, t1.clone()), (-1, t1.transpose())],
        )
        .unwrap();
        let c = BlockCirculant::from_symbol(&sym, 6).unwrap();
        let dense = real_part_checked(&c.to_dense(), 1e-12).unwrap();
        let x = DVector::from_fn(12, |k, _| ((k * k) as f64 * 0.1).cos());
        assert_abs_diff_eq!(c.apply(&x), &dense * &x, epsilon = 1e-12);
    }

    proptest! {
        /// FFT-based apply agrees with the dense time-domain matrix for
        /// random banded block symbols of every small size and length.
        #[test]
        fn fft_apply_matches_dense(
            n in 1usize..17,
            s in 1usize..4,
            seed_entries in proptest::collection::vec(-2.0f64..2.0, 5 * 9),
        ) {
            let mut it = seed_entries.into_iter();
            let mut coeffs = Vec::new();
            for k in -2i64..=2 {
                let block = DMatrix::from_fn(s, s, |_, _| it.next().unwrap_or(0.3));
                coeffs.push((k, block));
            }
            let sym = BlockSymbol::from_real_coefficients(s, s, coeffs).unwrap();
            let c = BlockCirculant::from_symbol(&sym, n).unwrap();
            let dense = c.to_dense();
            let x = DVector::from_fn(n * s, |k, _| ((k as f64) * 0.37).sin());
            let xc = x.map(|v| Complex64::new(v, 0.0));
            let via_fft = c.apply_complex(&xc);
            let via_dense = &dense * &xc;
            for (a, b) in via_fft.iter().zip(via_dense.iter()) {
                prop_assert!((a - b).norm() < 1e-11, "apply mismatch: {a} vs {b}");
            }
        }

        /// Round trip `solve(apply(x)) = x` on diagonally dominant random
        /// symbols.
        #[test]
        fn fft_solve_round_trips(
            n in 1usize..13,
            s in 1usize..3,
            seed_entries in proptest::collection::vec(-0.2f64..0.2, 3 * 4),
        ) {
            let mut it = seed_entries.into_iter();
            let mut coeffs = Vec::new();
            for k in -1i64..=1 {
                let mut block = DMatrix::from_fn(s, s, |_, _| it.next().unwrap_or(0.05));
                if k == 0 {
                    for d in 0..s {
                        block[(d, d)] += 3.0;
                    }
                }
                coeffs.push((k, block));
            }
            let sym = BlockSymbol::from_real_coefficients(s, s, coeffs).unwrap();
            let c = BlockCirculant::from_symbol(&sym, n).unwrap();
            let x = DVector::from_fn(n * s, |k, _| ((k as f64) * 1.3).cos());
            let back = c.solve(&c.apply(&x)).unwrap();
            for (a, b) in back.iter().zip(x.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
