//! Dense and sparse matrix kernels and the decompositions used by the rest of
//! the crate. Nothing in here knows about graphs.

mod decomp;
mod dense;
mod sparse;

pub use decomp::{
    least_squares, numeric_rank, orthonormal_basis, orthonormal_complement, symmetric_eigen, thin_svd, LeastSquares,
    SymmetricEigen, ThinSvd,
};
pub(crate) use dense::dot as dense_dot;
pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;

use thiserror::Error;

/// Relative singular-value cutoff used when a rank decision is needed.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch ({}x{} vs {}x{})", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("buffer of length {len} cannot hold a {rows}x{cols} matrix")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidSparse(String),
    #[error("{op} did not converge after {iterations} sweeps")]
    NonConvergence { op: &'static str, iterations: usize },
    #[error("{0} requires a non-empty matrix")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

/// Sparse-times-dense product `s * d`.
pub fn spmm(s: &SparseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    s.spmm(d)
}
