use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("geometry mismatch between operands")]
    GeometryMismatch,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("gamma must be nonnegative, got {0} (negate gamma and conjugate instead)")]
    NegativeGamma(f64),

    #[error("gamma = 0 is degenerate for {0}")]
    DegenerateGamma(&'static str),

    #[error("truncation too shallow: need occupation depth {required}, have {available}")]
    TruncationTooShallow { required: usize, available: usize },

    #[error("interior margin {margin} exceeds the smallest truncation extent {limit}")]
    InvalidMargin { margin: usize, limit: usize },

    #[error("matrix is singular to working precision (pivot {pivot:e} in column {column})")]
    Singular { pivot: f64, column: usize },

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("vanishing gram entry at pair {index}: |<psi,phi>| = {value:e}")]
    VanishingGram { index: usize, value: f64 },

    #[error("spectrum is not real: max |Im λ| = {max_imag:e} exceeds tolerance {tol:e}")]
    ComplexSpectrum { max_imag: f64, tol: f64 },

    #[error("spectrum is nearly degenerate: min gap {gap:e} below {threshold:e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("eigensolver did not converge after {iterations} iterations ({found} of {dim} eigenvalues found)")]
    NoConvergence { iterations: usize, found: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed matrix input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
