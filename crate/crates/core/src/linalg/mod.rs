//! Small dense eigenvalue routines and bracketed scalar root finding.
//!
//! Everything here operates on matrices of order at most [`MAX_ORDER`].
//! Orders 2 and 3 go through the characteristic polynomial; larger orders
//! use a Hessenberg reduction followed by Francis double-shift QR.

mod eigen;
mod matrix;
mod roots;

use thiserror::Error;

pub use eigen::{
    eigen_basis_2x2, eigenpair_for, eigenvalues, max_real_eigenvalue, symmetric_eigen, Basis2x2,
    EigenPair, SymmetricEigen, QR_MAX_ITERATIONS,
};
pub use matrix::{Matrix, MAX_ORDER};
pub use roots::{bracketed_root, brent, sign_change_brackets, RootOptions, DEFAULT_ROOT_TOL, DEFAULT_SCAN_SAMPLES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows} rows, a row of length {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix order {0} outside supported range 1..=8")]
    UnsupportedOrder(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("no eigenvalue is real within tolerance")]
    NoRealEigenvalue,
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("eigenvalues are complex or repeated")]
    ComplexOrRepeatedEigenvalues,
    #[error("eigenvector cannot carry the requested unit component")]
    DegenerateNormalization,
    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("no sign change found on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
}

pub(crate) fn check_order(m: &Matrix) -> Result<(), LinalgError> {
    let n = m.order();
    if n == 0 || n > MAX_ORDER {
        return Err(LinalgError::UnsupportedOrder(n));
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(())
}
