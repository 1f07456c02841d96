//! The fixed orthogonal rotation basis Ω, covariance factorizations, and the
//! scaled-L matrix invariants.
//!
//! Ω is an n×n orthogonal matrix whose first column is n^{-1/2}·1, so that
//! 1′Ω = √n·e₁′. A scaled-L matrix S (m×n) has zero column sums and gram
//! S′S = m·I; rows of S·Ω′·A added to the mean are samples hitting the target
//! mean and covariance exactly.

use crate::linalg;
use crate::{KromError, Result};
use nalgebra::{DMatrix, DVector};

/// Deterministic orthogonal basis with first column n^{-1/2}·1.
///
/// Column 0 is constant. For column c ≥ 1 put q = n − c + 1; rows above c−1
/// are zero, row c−1 holds the pivot (−1)^{n−1}·√((q−1)/q), and rows c..n
/// share the value (−1)^n/√(q(q−1)). Every non-leading column therefore sums
/// to zero and the columns are orthonormal.
pub fn build_omega(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(KromError::Dimension("rotation basis needs n >= 1".into()));
    }
    let mut omega = DMatrix::zeros(n, n);
    let lead = 1.0 / (n as f64).sqrt();
    for r in 0..n {
        omega[(r, 0)] = lead;
    }
    let pivot_sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 }; // (−1)^{n−1}
    for c in 1..n {
        let q = (n - c + 1) as f64;
        omega[(c - 1, c)] = pivot_sign * ((q - 1.0) / q).sqrt();
        let tail = -pivot_sign / (q * (q - 1.0)).sqrt(); // (−1)^n / √(q(q−1))
        for r in c..n {
            omega[(r, c)] = tail;
        }
    }
    Ok(omega)
}

/// Upper-triangular Cholesky factor A with A′A = V.
pub fn factor_covariance(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(v.clone()).ok_or(KromError::NotPositiveDefinite)?;
    Ok(chol.l().transpose())
}

/// Symmetric positive-definite square root A = V^{1/2} with A·A = V.
pub fn sqrt_covariance(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::sym_sqrt(v)
}

/// The pair (Ω, A) used to map scaled-L matrices onto target moments.
#[derive(Debug, Clone)]
pub struct RotationBasis {
    omega: DMatrix<f64>,
    a: DMatrix<f64>,
}

impl RotationBasis {
    /// Basis with the symmetric root A = V^{1/2} (the default: the symmetric
    /// root keeps the third-moment structure aligned with the rotation, which
    /// a triangular factor does not).
    pub fn from_covariance(v: &DMatrix<f64>) -> Result<Self> {
        Self::with_factor(v, sqrt_covariance(v)?)
    }

    /// Basis with the upper-triangular Cholesky factor, for workflows that
    /// need a triangular A.
    pub fn from_covariance_cholesky(v: &DMatrix<f64>) -> Result<Self> {
        Self::with_factor(v, factor_covariance(v)?)
    }

    fn with_factor(v: &DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = v.nrows();
        if v.ncols() != n {
            return Err(KromError::Dimension(format!(
                "covariance must be square, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        let omega = build_omega(n)?;
        // Defensive invariants; both hold by construction up to round-off.
        let ortho = linalg::max_abs(&(omega.transpose() * &omega - DMatrix::identity(n, n)));
        debug_assert!(ortho < 1e-10, "rotation lost orthogonality: {ortho:.3e}");
        let scale = linalg::max_abs(v).max(1e-300);
        let recon = linalg::max_abs(&(a.transpose() * &a - v));
        if recon > 1e-10 * scale {
            return Err(KromError::SingularFactor);
        }
        Ok(Self { omega, a })
    }

    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
}

/// Diagnostics from checking the scaled-L invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLReport {
    /// max_j |1′S e_j|
    pub max_abs_col_sum: f64,
    /// max_{jk} |(S′S − mI)_{jk}|
    pub max_gram_deviation: f64,
    pub pass: bool,
}

/// Check 1′S = 0 and S′S = m·I. Column sums are compared against `tol`
/// directly; the gram deviation against `tol·m` since its entries scale
/// with m.
pub fn validate_scaled_l(s: &DMatrix<f64>, tol: f64) -> ScaledLReport {
    let m = s.nrows() as f64;
    let col_sum = (0..s.ncols())
        .map(|j| s.column(j).sum().abs())
        .fold(0.0, f64::max);
    let gram = s.transpose() * s - DMatrix::identity(s.ncols(), s.ncols()) * m;
    let gram_dev = linalg::max_abs(&gram);
    ScaledLReport {
        max_abs_col_sum: col_sum,
        max_gram_deviation: gram_dev,
        pass: col_sum <= tol && gram_dev <= tol * m,
    }
}

/// An m×n matrix with zero column sums and gram S′S = m·I.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLMatrix {
    data: DMatrix<f64>,
}

impl ScaledLMatrix {
    /// Validate the invariants at tolerance `tol` (see [`validate_scaled_l`]).
    pub fn new(data: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (m, n) = (data.nrows(), data.ncols());
        if m < n + 1 {
            return Err(KromError::Dimension(format!(
                "scaled-L needs m >= n + 1, got m = {m}, n = {n}"
            )));
        }
        let report = validate_scaled_l(&data, tol);
        if !report.pass {
            return Err(KromError::DomainError(format!(
                "scaled-L invariants violated: max |col sum| = {:.3e}, \
                 max |S'S - mI| = {:.3e} (tol {tol:.1e})",
                report.max_abs_col_sum, report.max_gram_deviation
            )));
        }
        Ok(Self { data })
    }

    /// Assemble from solved columns without re-validation (the solver
    /// guarantees the invariants by construction); debug builds still check.
    pub(crate) fn from_columns_unchecked(cols: Vec<DVector<f64>>) -> Self {
        let m = cols[0].len();
        let data = DMatrix::from_fn(m, cols.len(), |r, c| cols[c][r]);
        debug_assert!(validate_scaled_l(&data, 1e-8).pass);
        Self { data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column j as a vector.
    pub fn column(&self, j: usize) -> DVector<f64> {
        self.data.column(j).into_owned()
    }
}

/// Recover the (row-permuted) scaled-L matrix from a generated sample:
/// S* = (X − 1μ′)·A⁻¹·Ω.
pub fn recover_scaled_l(
    x: &DMatrix<f64>,
    mu: &DVector<f64>,
    basis: &RotationBasis,
) -> Result<DMatrix<f64>> {
    let n = basis.n();
    if x.ncols() != n || mu.len() != n {
        return Err(KromError::Dimension(format!(
            "sample has {} columns, basis dimension is {n}",
            x.ncols()
        )));
    }
    let mut centered = x.clone();
    for j in 0..n {
        let mj = mu[j];
        centered.column_mut(j).iter_mut().for_each(|v| *v -= mj);
    }
    // Z = centered · A⁻¹ solved as A′Z′ = centered′.
    let lu = basis.a().transpose().lu();
    let zt = lu
        .solve(&centered.transpose())
        .ok_or(KromError::SingularFactor)?;
    Ok(zt.transpose() * basis.omega())
}
