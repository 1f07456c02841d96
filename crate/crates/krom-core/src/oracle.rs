//! Independent brute-force verifiers used by the test suite, plus the
//! trial-and-error baseline generator used for timing comparisons.
//!
//! Everything here deliberately avoids the closed-form machinery of
//! [`crate::skewsolver`]: the column-1 check enumerates cubic roots through a
//! companion matrix, the column-k check parameterizes the full solution set
//! of the linear system, and the baseline hunts for roots with multi-start
//! Newton iteration instead of pre-checking admissibility.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::KromError;
use crate::Result;
use crate::krom::{random_permutation, rotate_into_target, Provenance, SimulationSample};
use crate::moments::{self, SampleMatrix, TargetMoments};
use crate::orthobasis::{RotationBasis, ScaledLMatrix};
use crate::skewsolver::{
    build_column_system, draw_adjusted, embed_column, ColumnKSystem, BOUNDARY_TOL, RANK_TOL_REL,
};
use crate::stream::{derive_rng, STREAM_PERMUTATION};
use crate::valuegen::ValueSource;

/// Largest column index the dense oracle accepts.
pub const ORACLE_MAX_K: usize = 4;
/// Largest sample size the dense oracle accepts.
pub const ORACLE_MAX_M: usize = 12;

const NEWTON_STARTS: u32 = 20;
const NEWTON_ITERS: u32 = 60;
const NEWTON_TOL: f64 = 1e-10;

/// Outcome of a brute-force solvability check.
#[derive(Debug, Clone)]
pub struct OracleVerdict {
    pub solvable: bool,
    /// A concrete solution when `solvable`.
    pub witness: Option<DVector<f64>>,
    /// Relative residual of the witness; infinite when no witness exists.
    pub residual: f64,
}

impl OracleVerdict {
    fn unsolvable() -> Self {
        Self {
            solvable: false,
            witness: None,
            residual: f64::INFINITY,
        }
    }
}

// ---------------------------------------------------------------------------
// Column 1: exhaustive root scan.
// ---------------------------------------------------------------------------

/// Decide real solvability of s₁+s₂+s₃ = a, Σs² = b, Σs³ = c by eliminating
/// to the cubic 6x³ − 3dx − 2e = 0, enumerating its real roots as companion
/// matrix eigenvalues, and testing the pair discriminant Δ₂ = 2d − 3x² for
/// each root.
pub fn column1_root_oracle(a: f64, b: f64, c: f64) -> OracleVerdict {
    let d = b - a * a / 3.0;
    let e = c - a * b + 2.0 / 9.0 * a * a * a;
    #[rustfmt::skip]
    let companion = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, e / 3.0,
        1.0, 0.0, d / 2.0,
        0.0, 1.0, 0.0,
    ]);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for eig in companion.complex_eigenvalues().iter() {
        if eig.im.abs() > 1e-7 * (1.0 + eig.norm()) {
            continue;
        }
        // Polish the real part; any convergent point is a genuine real root.
        let mut x = eig.re;
        for _ in 0..4 {
            let f = x * x * x - 0.5 * d * x - e / 3.0;
            let fp = 3.0 * x * x - 0.5 * d;
            if fp.abs() > f64::MIN_POSITIVE {
                x -= f / fp;
            }
        }
        let delta2 = 2.0 * d - 3.0 * x * x;
        if delta2 < -BOUNDARY_TOL {
            continue;
        }
        let root = delta2.max(0.0).sqrt();
        let shift = a / 3.0;
        let witness = DVector::from_vec(vec![
            x + shift,
            (-x + root) / 2.0 + shift,
            (-x - root) / 2.0 + shift,
        ]);
        let residual = column1_residual(&witness, a, b, c);
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((witness, residual));
        }
    }
    match best {
        Some((witness, residual)) => OracleVerdict {
            solvable: true,
            witness: Some(witness),
            residual,
        },
        None => OracleVerdict::unsolvable(),
    }
}

fn column1_residual(s: &DVector<f64>, a: f64, b: f64, c: f64) -> f64 {
    let scale = 1.0_f64.max(a.abs()).max(b.abs()).max(c.abs());
    let r1 = (s[0] + s[1] + s[2] - a).abs();
    let r2 = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2] - b).abs();
    let r3 = (s[0].powi(3) + s[1].powi(3) + s[2].powi(3) - c).abs();
    r1.max(r2).max(r3) / scale
}

// ---------------------------------------------------------------------------
// Columns k >= 2: dense parameterization of the solution set.
// ---------------------------------------------------------------------------

/// Decide solvability of Uy = v, y′y = rhs_quad by computing the minimum-norm
/// particular solution and walking along a null direction; restricted to desk
/// scale so the answer stays trustworthy.
pub fn columnk_dense_oracle(sys: &ColumnKSystem) -> Result<OracleVerdict> {
    if sys.k > ORACLE_MAX_K || sys.m > ORACLE_MAX_M {
        return Err(KromError::ScaleTooLarge {
            k: sys.k,
            m: sys.m,
            max_k: ORACLE_MAX_K,
            max_m: ORACLE_MAX_M,
        });
    }
    Ok(dense_quadratic_solve(sys))
}

/// Shared dense path (no scale guard): U is (k+1)×(k+2), so the null space is
/// never empty and ‖y_p + t·null‖² = ‖y_p‖² + t² lets the sphere constraint
/// be met exactly whenever rhs_quad ≥ ‖y_p‖².
pub(crate) fn dense_quadratic_solve(sys: &ColumnKSystem) -> OracleVerdict {
    let svd = sys.u.clone().svd(true, true);
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let Ok(y_p) = svd.solve(&sys.v, RANK_TOL_REL * smax) else {
        return OracleVerdict::unsolvable();
    };
    let vscale = 1.0_f64.max(sys.v.amax());
    if (&sys.u * &y_p - &sys.v).amax() > 1e-8 * vscale {
        return OracleVerdict::unsolvable();
    }
    let spare = sys.rhs_quad - y_p.norm_squared();
    if spare < -BOUNDARY_TOL {
        return OracleVerdict::unsolvable();
    }
    let gram = sys.u.transpose() * &sys.u;
    let eig = gram.symmetric_eigen();
    let (null_idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| x.partial_cmp(y).expect("finite eigenvalues"))
        .expect("non-empty spectrum");
    let null_dir = eig.eigenvectors.column(null_idx).into_owned();
    let y = &y_p + null_dir * spare.max(0.0).sqrt();
    let lin = (&sys.u * &y - &sys.v).amax() / vscale;
    let quad = (y.norm_squared() - sys.rhs_quad).abs() / 1.0_f64.max(sys.rhs_quad.abs());
    OracleVerdict {
        solvable: true,
        witness: Some(y),
        residual: lin.max(quad),
    }
}

// ---------------------------------------------------------------------------
// Kollo skewness through the full co-skewness tensor.
// ---------------------------------------------------------------------------

/// Kollo skewness computed the long way: build the standardized co-skewness
/// tensor and sum each frontal slice. Cross-checks the per-row shortcut used
/// by [`moments::kollo_skewness`].
pub fn kollo_tensor_oracle(m_matrix: &ScaledLMatrix) -> Result<DVector<f64>> {
    let sample = SampleMatrix::new(m_matrix.matrix().clone())?;
    Ok(moments::coskewness(&sample)?.row_sums())
}

// ---------------------------------------------------------------------------
// Trial-and-error baseline.
// ---------------------------------------------------------------------------

/// Generate a sample with the same column-wise structure as the main engine
/// but no admissibility pre-checks: each column is attempted by multi-start
/// Newton root search and redrawn on failure. Serves as the timing baseline.
pub fn trial_and_error_baseline(
    target: &TargetMoments,
    m: usize,
    source: &ValueSource,
    max_trials: u32,
    seed: u64,
) -> Result<SimulationSample> {
    let start = Instant::now();
    let n = target.n();
    if n == 0 || m < n + 2 {
        return Err(KromError::Dimension(format!(
            "need m >= n + 2, got m = {m}, n = {n}"
        )));
    }
    if max_trials == 0 {
        return Err(KromError::Dimension("max_trials must be positive".into()));
    }
    let basis = RotationBasis::from_covariance(target.v())?;
    let p = moments::rotate_skewness(target.tau(), basis.omega())?;

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut attempts = vec![0u32; n];
    for k in 1..=n {
        let count = m - (k + 2);
        let mut rng = derive_rng(seed, k as u64);
        let mut solved = None;
        for trial in 1..=max_trials {
            attempts[k - 1] = trial;
            let w = if source.is_zero() {
                vec![0.0; count]
            } else {
                match draw_adjusted(source, count, k - 1, &mut rng) {
                    Ok(w) => w,
                    Err(KromError::DegenerateValues) => continue,
                    Err(e) => return Err(e),
                }
            };
            let head = if k == 1 {
                let mf = m as f64;
                let a = -w.iter().sum::<f64>();
                let b = mf - w.iter().map(|x| x * x).sum::<f64>();
                let c = mf * p[0] - w.iter().map(|x| x * x * x).sum::<f64>();
                newton_column1(a, b, c, &mut rng)
            } else {
                let s_partial = DMatrix::from_fn(m, cols.len(), |r, j| cols[j][r]);
                let sys = build_column_system(&s_partial, &w, p[k - 1], m, k)?;
                newton_column_k(&sys, &mut rng)
            };
            if let Some(h) = head {
                solved = Some(embed_column(h.as_slice(), &w, m));
                break;
            }
        }
        match solved {
            Some(col) => cols.push(col),
            None => {
                return Err(KromError::TrialsExhausted {
                    column: k,
                    trials: max_trials,
                })
            }
        }
    }

    let s = ScaledLMatrix::from_columns_unchecked(cols);
    let m_mat = s.matrix() * basis.omega().transpose();
    let mut perm_rng = derive_rng(seed, STREAM_PERMUTATION);
    let perm = random_permutation(m, &mut perm_rng);
    let x = rotate_into_target(target, &basis, &m_mat, &perm);
    Ok(SimulationSample {
        x: SampleMatrix::new(x)?,
        provenance: Provenance {
            seed,
            effective_blocks: 1,
            block_lengths: vec![m],
            attempts: vec![attempts],
            wall_time: start.elapsed(),
        },
    })
}

/// Newton search for the three power-sum equations of column 1.
fn newton_column1<R: Rng + ?Sized>(a: f64, b: f64, c: f64, rng: &mut R) -> Option<DVector<f64>> {
    let fscale = 1.0_f64.max(a.abs()).max(b.abs()).max(c.abs());
    let spread = (b.abs().max(1.0) / 3.0).sqrt();
    for _ in 0..NEWTON_STARTS {
        let mut s =
            DVector::from_fn(3, |_, _| spread * rng.sample::<f64, _>(StandardNormal));
        for _ in 0..NEWTON_ITERS {
            let f = DVector::from_vec(vec![
                s[0] + s[1] + s[2] - a,
                s[0] * s[0] + s[1] * s[1] + s[2] * s[2] - b,
                s[0].powi(3) + s[1].powi(3) + s[2].powi(3) - c,
            ]);
            if f.amax() <= NEWTON_TOL * fscale {
                return Some(s);
            }
            #[rustfmt::skip]
            let jac = DMatrix::from_row_slice(3, 3, &[
                1.0, 1.0, 1.0,
                2.0 * s[0], 2.0 * s[1], 2.0 * s[2],
                3.0 * s[0] * s[0], 3.0 * s[1] * s[1], 3.0 * s[2] * s[2],
            ]);
            let Some(step) = jac.lu().solve(&f) else { break };
            if !step.iter().all(|v| v.is_finite()) {
                break;
            }
            s -= step;
        }
    }
    None
}

/// Newton search for the square system [Uy − v; y′y − rhs_quad] = 0.
fn newton_column_k<R: Rng + ?Sized>(sys: &ColumnKSystem, rng: &mut R) -> Option<DVector<f64>> {
    let dim = sys.u.ncols();
    let rows = sys.u.nrows();
    let fscale = 1.0_f64.max(sys.v.amax()).max(sys.rhs_quad.abs());
    let spread = (sys.rhs_quad.abs().max(1.0) / dim as f64).sqrt();
    for _ in 0..NEWTON_STARTS {
        let mut y =
            DVector::from_fn(dim, |_, _| spread * rng.sample::<f64, _>(StandardNormal));
        for _ in 0..NEWTON_ITERS {
            let lin = &sys.u * &y - &sys.v;
            let mut f = DVector::zeros(rows + 1);
            f.rows_mut(0, rows).copy_from(&lin);
            f[rows] = y.norm_squared() - sys.rhs_quad;
            if f.amax() <= NEWTON_TOL * fscale {
                return Some(y);
            }
            let mut jac = DMatrix::zeros(rows + 1, dim);
            jac.view_mut((0, 0), (rows, dim)).copy_from(&sys.u);
            jac.row_mut(rows).copy_from(&(y.transpose() * 2.0));
            let Some(step) = jac.lu().solve(&f) else { break };
            if !step.iter().all(|v| v.is_finite()) {
                break;
            }
            y -= step;
        }
    }
    None
}
