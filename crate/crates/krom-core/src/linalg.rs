//! Small shared linear-algebra helpers built on nalgebra.

use crate::{KromError, Result};
use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue floor for symmetric (inverse) square roots: an
/// eigenvalue below `EIG_FLOOR_REL * trace(V) / n` marks V as singular.
pub const EIG_FLOOR_REL: f64 = 1e-12;

/// Symmetric eigendecomposition with the shared singularity floor.
/// Returns (eigenvalues, eigenvectors) or the floor that was violated.
fn checked_sym_eigen(v: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let n = v.nrows();
    if n == 0 || v.ncols() != n {
        return Err(KromError::Dimension(format!(
            "expected square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let floor = EIG_FLOOR_REL * v.trace() / n as f64;
    let eig = v.clone().symmetric_eigen();
    Ok((eig.eigenvalues, eig.eigenvectors, floor))
}

/// Symmetric positive-definite square root V^{1/2}.
pub fn sym_sqrt(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs, floor) = checked_sym_eigen(v)?;
    if vals.iter().any(|&l| l <= floor) {
        return Err(KromError::NotPositiveDefinite);
    }
    let d = DMatrix::from_diagonal(&vals.map(f64::sqrt));
    Ok(&vecs * d * vecs.transpose())
}

/// Symmetric inverse square root V^{-1/2}.
pub fn sym_inv_sqrt(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs, floor) = checked_sym_eigen(v)?;
    if let Some(l) = vals.iter().find(|&&l| l <= floor) {
        return Err(KromError::SingularCovariance(format!(
            "eigenvalue {l:.3e} at or below floor {floor:.3e}"
        )));
    }
    let d = DMatrix::from_diagonal(&vals.map(|l| 1.0 / l.sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// Maximum absolute entry of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}
