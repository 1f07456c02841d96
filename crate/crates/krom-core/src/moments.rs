//! Sample moment statistics: mean, covariance, co-skewness tensor, Mardia
//! skewness, Kollo skewness, and the rotated Kollo skewness.
//!
//! All moments use the population (divide-by-m) convention, and
//! standardization uses the symmetric inverse square root V^{-1/2}, so every
//! statistic is invariant under row permutations of the sample.

use crate::linalg;
use crate::{KromError, Result};
use nalgebra::{DMatrix, DVector};

/// An m×n sample: rows are observations, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    /// Wrap a matrix as a sample; every entry must be finite and both
    /// dimensions positive.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(KromError::Dimension(format!(
                "sample must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some((idx, _)) = data.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            let (r, c) = (idx % data.nrows(), idx / data.nrows());
            return Err(KromError::Dimension(format!(
                "non-finite entry at row {r}, column {c}"
            )));
        }
        Ok(Self { data })
    }

    /// Build from row-major nested slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(KromError::Dimension("sample must be non-empty".into()));
        }
        let n = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(KromError::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), n, &flat))
    }

    /// Number of observations m.
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// Number of variables n.
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Contiguous row window `[start, start+len)` as a new sample.
    pub fn row_window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.rows() || len == 0 {
            return Err(KromError::Dimension(format!(
                "window [{start}, {}) out of range for {} rows",
                start + len,
                self.rows()
            )));
        }
        Ok(Self {
            data: self.data.rows(start, len).into_owned(),
        })
    }
}

/// The three simulation targets: mean vector, covariance matrix, and Kollo
/// skewness vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMoments {
    mu: DVector<f64>,
    v: DMatrix<f64>,
    tau: DVector<f64>,
}

impl TargetMoments {
    /// Validate dimensions and symmetry (positive definiteness is checked at
    /// factorization time). V is symmetrized after the symmetry check to
    /// absorb representation round-off.
    pub fn new(mu: DVector<f64>, v: DMatrix<f64>, tau: DVector<f64>) -> Result<Self> {
        let n = mu.len();
        if v.nrows() != n || v.ncols() != n || tau.len() != n {
            return Err(KromError::Dimension(format!(
                "targets disagree: mu {}, V {}x{}, tau {}",
                n,
                v.nrows(),
                v.ncols(),
                tau.len()
            )));
        }
        let scale = linalg::max_abs(&v).max(1e-300);
        let asym = linalg::max_abs(&(&v - v.transpose()));
        if asym > 1e-12 * scale {
            return Err(KromError::Dimension(format!(
                "V not symmetric: max |V - V'| = {asym:.3e} (scale {scale:.3e})"
            )));
        }
        let v = (&v + v.transpose()) * 0.5;
        Ok(Self { mu, v, tau })
    }

    /// Targets measured from an existing sample.
    pub fn from_sample(x: &SampleMatrix) -> Result<Self> {
        let (mu, v) = sample_mean_cov(x)?;
        let tau = kollo_skewness(x)?;
        Self::new(mu, v, tau)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn tau(&self) -> &DVector<f64> {
        &self.tau
    }
}

/// Dense co-skewness tensor c_{ijk}, fully symmetric in its indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CoskewnessTensor {
    n: usize,
    c: Vec<f64>,
}

impl CoskewnessTensor {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            c: vec![0.0; n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry c_{ijk}.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, val: f64) {
        self.c[(i * self.n + j) * self.n + k] = val;
    }

    /// Row sums τ_i = Σ_{j,k} c_{ijk}.
    pub fn row_sums(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            let base = i * self.n * self.n;
            self.c[base..base + self.n * self.n].iter().sum()
        })
    }

    /// Sum of squared entries Σ c_{ijk}².
    pub fn sum_of_squares(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }
}

/// Population mean and covariance: mu = m⁻¹·1′X, V = m⁻¹(X − 1mu′)′(X − 1mu′).
pub fn sample_mean_cov(x: &SampleMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (m, _n) = (x.rows(), x.cols());
    if m < 2 {
        return Err(KromError::Dimension(format!(
            "need at least 2 observations for covariance, got {m}"
        )));
    }
    let mat = x.matrix();
    let mu = mat.row_mean().transpose();
    let centered = center(mat, &mu);
    let v = centered.transpose() * &centered / m as f64;
    // Enforce exact symmetry against accumulation order effects.
    let v = (&v + v.transpose()) * 0.5;
    Ok((mu, v))
}

fn center(mat: &DMatrix<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
    let mut c = mat.clone();
    for j in 0..c.ncols() {
        let mj = mu[j];
        c.column_mut(j).iter_mut().for_each(|x| *x -= mj);
    }
    c
}

/// Standardized residuals Y* = (X − 1mu′)·V^{-1/2}.
fn standardized(x: &SampleMatrix) -> Result<DMatrix<f64>> {
    let (mu, v) = sample_mean_cov(x)?;
    let root = linalg::sym_inv_sqrt(&v)?;
    Ok(center(x.matrix(), &mu) * root)
}

/// Third standardized moment tensor c_{ijk} = m⁻¹ Σ_r y*_{ri} y*_{rj} y*_{rk}.
pub fn coskewness(x: &SampleMatrix) -> Result<CoskewnessTensor> {
    let y = standardized(x)?;
    let (m, n) = (y.nrows(), y.ncols());
    let mut t = CoskewnessTensor::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut acc = 0.0;
                for r in 0..m {
                    acc += y[(r, i)] * y[(r, j)] * y[(r, k)];
                }
                let val = acc / m as f64;
                // Fill all index permutations of (i, j, k).
                for (a, b, c) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    t.set(a, b, c, val);
                }
            }
        }
    }
    Ok(t)
}

/// Mardia skewness β₁ = Σ_{i,j,k} c_{ijk}².
pub fn mardia_skewness(x: &SampleMatrix) -> Result<f64> {
    Ok(coskewness(x)?.sum_of_squares())
}

/// Kollo skewness τ_i = Σ_{j,k} c_{ijk}, computed by the direct contraction
/// τ = m⁻¹ Σ_r (y*_r·1)² y*_r′ (identical to the tensor row sums, without
/// materializing the tensor).
pub fn kollo_skewness(x: &SampleMatrix) -> Result<DVector<f64>> {
    let y = standardized(x)?;
    let (m, n) = (y.nrows(), y.ncols());
    let mut tau = DVector::zeros(n);
    for r in 0..m {
        let row_sum: f64 = y.row(r).iter().sum();
        let w = row_sum * row_sum;
        for i in 0..n {
            tau[i] += w * y[(r, i)];
        }
    }
    Ok(tau / m as f64)
}

/// Rotated Kollo skewness p = n⁻¹·Ω′τ; its first entry equals n^{-3/2}·1′τ.
pub fn rotate_skewness(tau: &DVector<f64>, omega: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = tau.len();
    if omega.nrows() != n || omega.ncols() != n {
        return Err(KromError::Dimension(format!(
            "rotation is {}x{}, skewness has length {n}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    Ok(omega.transpose() * tau / n as f64)
}

/// Inverse of [`rotate_skewness`]: τ = n·Ω·p.
pub fn unrotate_skewness(p: &DVector<f64>, omega: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.len();
    if omega.nrows() != n || omega.ncols() != n {
        return Err(KromError::Dimension(format!(
            "rotation is {}x{}, rotated skewness has length {n}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    Ok(omega * p * n as f64)
}
