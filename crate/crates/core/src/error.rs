//! Crate-wide error type.

/// Errors reported by grid construction, assembly, structured-matrix algebra,
/// spectral analysis, and the solver stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A circulant solve hit a numerically singular frequency block; `index`
    /// is the frequency `r` with grid angle `theta_r = 2 pi r / n`.
    #[error("singular frequency block at frequency index {index}")]
    SingularFrequencyBlock { index: usize },

    #[error("zero pivot in factorization at row {row}")]
    ZeroPivot { row: usize },

    /// Symbol evaluated at a pole (e.g. the inverse Laplacian symbol at theta = 0).
    #[error("symbol has a pole at theta = {theta}")]
    SymbolPole { theta: f64 },

    #[error("{level} solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        level: String,
        iterations: usize,
        residual: f64,
    },

    #[error("Krylov breakdown in {level} at iteration {iteration}")]
    Breakdown { level: String, iteration: usize },

    #[error("matrix dimension {dim} exceeds dense spectrum threshold {threshold}")]
    DenseThreshold { dim: usize, threshold: usize },

    #[error("Picard iteration diverged: {0}")]
    PicardDiverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
