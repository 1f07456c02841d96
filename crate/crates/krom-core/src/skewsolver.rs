//! Closed-form solver for the per-column Kollo skewness equations.
//!
//! Column k of the scaled-L matrix must satisfy four constraints: the
//! skewness contraction m⁻¹Σ s_{i1}²s_{ik} = p_k, unit scale Σ s_{ik}² = m,
//! orthogonality to every previous column, and zero column sum. The last
//! m−(k+2) entries are prescribed "arbitrary" values w; the remaining k+2
//! unknowns are then pinned down by a cubic (column 1) or by a linear system
//! plus one quadratic (columns 2..n). Admissibility — whether real solutions
//! exist — is decided *before* solving, so callers can count failures or
//! redraw values without running any optimizer.

use crate::orthobasis::ScaledLMatrix;
use crate::stream::{derive_rng, STREAM_SIGN};
use crate::valuegen::{adjust_values, draw_raw, ValueSource};
use crate::{KromError, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Signed slack at which a boundary inequality still counts as satisfied.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Relative SVD threshold for all rank decisions: singular values below
/// `RANK_TOL_REL · σ_max` are treated as zero.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Which admissibility condition failed, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedCondition {
    /// Cubic discriminant condition for column 1.
    Lemma1,
    /// rank(U) ≠ rank([U, v]): the linear system is inconsistent.
    RankCondition,
    /// Completed-square right-hand side is negative: no real quadratic root.
    QuadraticFormCondition,
    /// Nothing failed.
    None,
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub failed_condition: FailedCondition,
    /// Signed slack of the binding inequality (≥ −BOUNDARY_TOL when
    /// admissible). For a rank failure this is minus the projection residual.
    pub margin: f64,
}

impl AdmissibilityVerdict {
    fn pass(margin: f64) -> Self {
        Self {
            admissible: true,
            failed_condition: FailedCondition::None,
            margin,
        }
    }

    fn fail(failed_condition: FailedCondition, margin: f64) -> Self {
        Self {
            admissible: false,
            failed_condition,
            margin,
        }
    }
}

// ---------------------------------------------------------------------------
// Column 1: three symmetric power sums and a cubic.
// ---------------------------------------------------------------------------

/// Power-sum targets for the first three entries of column 1:
/// s₁+s₂+s₃ = a, s₁²+s₂²+s₃² = b, s₁³+s₂³+s₃³ = c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Column1Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Column1Coefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(KromError::DomainError(format!(
                "non-finite column-1 coefficients ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Coefficients induced by arbitrary values w for rows 4..m:
    /// a = −Σw, b = m − Σw², c = m·p₁ − Σw³ (so b ≤ m automatically).
    pub fn from_values(w: &[f64], m: usize, p1: f64) -> Result<Self> {
        if m < 3 || w.len() != m - 3 {
            return Err(KromError::Dimension(format!(
                "column 1 needs m − 3 arbitrary values, got {} for m = {m}",
                w.len()
            )));
        }
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for &x in w {
            s1 += x;
            s2 += x * x;
            s3 += x * x * x;
        }
        Self::new(-s1, m as f64 - s2, m as f64 * p1 - s3)
    }

    /// Centered second power sum d = b − a²/3.
    pub fn d(&self) -> f64 {
        self.b - self.a * self.a / 3.0
    }

    /// Centered third power sum e = c − ab + (2/9)a³.
    ///
    /// Expanding Σ(sᵢ − a/3)³ gives c − ab + a³/3 − a³/9 = c − ab + (2/9)a³;
    /// the alternative coefficient 9/2 seen in some write-ups makes the
    /// admissibility test disagree with actual root existence (see the
    /// brute-force cross-checks in the oracle module).
    pub fn e(&self) -> f64 {
        let a = self.a;
        self.c - a * self.b + 2.0 / 9.0 * a * a * a
    }
}

/// Real solvability of the column-1 system: d³ ≥ 6e².
pub fn lemma1_check(coef: &Column1Coefficients) -> AdmissibilityVerdict {
    let (d, e) = (coef.d(), coef.e());
    let margin = d * d * d - 6.0 * e * e;
    if margin >= -BOUNDARY_TOL {
        AdmissibilityVerdict::pass(margin)
    } else {
        AdmissibilityVerdict::fail(FailedCondition::Lemma1, margin)
    }
}

/// Real roots of the depressed cubic x³ − (d/2)x − e/3 = 0
/// (equivalently 6x³ − 3dx − 2e = 0).
fn depressed_cubic_roots(d: f64, e: f64) -> Vec<f64> {
    let delta3 = (e / 6.0).powi(2) - (d / 6.0).powi(3);
    if delta3 <= 0.0 && d > 0.0 {
        // Three real roots: trigonometric form, robust near delta3 ≈ 0.
        let rho = (d / 6.0).sqrt();
        let cos3t = ((e / 6.0) / rho.powi(3)).clamp(-1.0, 1.0);
        let theta = cos3t.acos() / 3.0;
        (0..3)
            .map(|j| 2.0 * rho * (theta - std::f64::consts::TAU * j as f64 / 3.0).cos())
            .collect()
    } else {
        // One real root: Cardano radicals (covers d ≤ 0 and boundary noise).
        let s = delta3.max(0.0).sqrt();
        vec![(e / 6.0 + s).cbrt() + (e / 6.0 - s).cbrt()]
    }
}

/// Solve for (s₁₁, s₂₁, s₃₁): shift to centered variables x = s − a/3, take
/// the cubic root x* that maximizes the quadratic discriminant Δ₂ = 2d − 3x*²,
/// then split the remaining pair and shift back.
pub fn solve_column1(coef: &Column1Coefficients) -> Result<(f64, f64, f64)> {
    let verdict = lemma1_check(coef);
    if !verdict.admissible {
        return Err(KromError::NotAdmissible {
            condition: verdict.failed_condition,
            margin: verdict.margin,
        });
    }
    let (d, e) = (coef.d(), coef.e());
    let xstar = depressed_cubic_roots(d, e)
        .into_iter()
        .max_by(|x, y| {
            let dx = 2.0 * d - 3.0 * x * x;
            let dy = 2.0 * d - 3.0 * y * y;
            dx.partial_cmp(&dy).expect("finite discriminants")
        })
        .expect("cubic has at least one real root");
    let delta2 = (2.0 * d - 3.0 * xstar * xstar).max(0.0);
    let x2 = (-xstar + delta2.sqrt()) / 2.0;
    let x3 = -xstar - x2;
    let shift = coef.a / 3.0;
    Ok((xstar + shift, x2 + shift, x3 + shift))
}

// ---------------------------------------------------------------------------
// Columns 2..n: linear system Uy = v plus the sphere y′y = rhs_quad.
// ---------------------------------------------------------------------------

/// The column-k system in the k+2 leading unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnKSystem {
    pub k: usize,
    pub m: usize,
    /// (k+1)×(k+2): row 0 squared first-column entries, rows 1..k the
    /// previous columns' entries, row k all ones.
    pub u: DMatrix<f64>,
    pub v: DVector<f64>,
    /// m − Σw² — the squared norm the unknowns must realize.
    pub rhs_quad: f64,
}

/// Assemble U, v, rhs_quad from the solved columns and the arbitrary values
/// w occupying rows k+3..m of column k.
pub fn build_column_system(
    s_partial: &DMatrix<f64>,
    w: &[f64],
    p_k: f64,
    m: usize,
    k: usize,
) -> Result<ColumnKSystem> {
    if k < 2 {
        return Err(KromError::Dimension(format!(
            "column system applies to k >= 2, got k = {k}"
        )));
    }
    if m < k + 2 || w.len() != m - (k + 2) {
        return Err(KromError::Dimension(format!(
            "column {k} needs m − (k+2) = {} arbitrary values at m = {m}, got {}",
            m as i64 - (k as i64 + 2),
            w.len()
        )));
    }
    if s_partial.nrows() != m || s_partial.ncols() != k - 1 {
        return Err(KromError::Dimension(format!(
            "partial matrix is {}x{}, expected {m}x{}",
            s_partial.nrows(),
            s_partial.ncols(),
            k - 1
        )));
    }
    let mf = m as f64;
    let mut u = DMatrix::zeros(k + 1, k + 2);
    for i in 0..k + 2 {
        let s_i1 = s_partial[(i, 0)];
        u[(0, i)] = s_i1 * s_i1;
        for j in 1..k {
            u[(j, i)] = s_partial[(i, j - 1)];
        }
        u[(k, i)] = 1.0;
    }
    let mut v = DVector::zeros(k + 1);
    let mut w_sq = 0.0;
    for (t, &wt) in w.iter().enumerate() {
        let i = k + 2 + t;
        let s_i1 = s_partial[(i, 0)];
        v[0] -= s_i1 * s_i1 * wt;
        for j in 1..k {
            v[j] -= s_partial[(i, j - 1)] * wt;
        }
        v[k] -= wt;
        w_sq += wt * wt;
    }
    v[0] += mf * p_k;
    Ok(ColumnKSystem {
        k,
        m,
        u,
        v,
        rhs_quad: mf - w_sq,
    })
}

/// Row-equilibrated, rank-revealed factorization of a column system, shared
/// by the admissibility check and the closed-form solve.
///
/// Row scaling leaves the solution set of Uy = v — and with it ranks,
/// consistency, margins, and solutions — unchanged, but the raw rows mix
/// wildly different scales (squared solved entries of order m against a row
/// of ones), and factorizing them directly loses enough precision at larger
/// systems to break the sphere constraint downstream.
///
/// Pivot columns are picked by modified Gram–Schmidt with largest-residual
/// pivoting and a second orthogonalization pass: systems at the
/// admissibility boundary carry near-duplicate columns, and pivoting keeps
/// such twins out of the basis so the solve stays well-conditioned.
struct SystemFactors {
    /// Pivot columns, in selection order.
    idx1: Vec<usize>,
    /// Remaining columns, ascending.
    idx2: Vec<usize>,
    /// U₁⁺v in pivot order (the unique y₁ with U₁y₁ = v − U₂y₂ at y₂ = 0).
    pv: DVector<f64>,
    /// C = U₁⁺U₂, rank × free, pivot order.
    c: DMatrix<f64>,
    /// ‖v − QQ′v‖ on the equilibrated system — the consistency residual.
    residual: f64,
    /// Threshold the residual is judged against.
    residual_tol: f64,
}

impl SystemFactors {
    fn new(sys: &ColumnKSystem) -> Self {
        let (rows, cols) = (sys.u.nrows(), sys.u.ncols());

        // Equilibrate: divide each row of [U | v] by its largest magnitude.
        let mut us = sys.u.clone();
        let mut vs = sys.v.clone();
        for i in 0..rows {
            let scale = us.row(i).amax();
            if scale > 0.0 && scale.is_finite() {
                for j in 0..cols {
                    us[(i, j)] /= scale;
                }
                vs[i] /= scale;
            }
        }

        // Pivoted modified Gram–Schmidt. `coef[j]` accumulates Q′·(column j),
        // giving the R factor for pivots and Q′U₂ for the free columns.
        let mut residuals: Vec<DVector<f64>> =
            (0..cols).map(|j| us.column(j).into_owned()).collect();
        let col_scale = residuals
            .iter()
            .map(|r| r.norm())
            .fold(0.0f64, f64::max);
        let tol = RANK_TOL_REL * col_scale;
        let mut coef: Vec<Vec<f64>> = vec![Vec::new(); cols];
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let mut idx1: Vec<usize> = Vec::new();
        let mut remaining: Vec<usize> = (0..cols).collect();
        while idx1.len() < rows && !remaining.is_empty() {
            let (pos, best_norm) = remaining
                .iter()
                .enumerate()
                .map(|(pos, &j)| (pos, residuals[j].norm()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite norms"))
                .expect("remaining is non-empty");
            if best_norm <= tol {
                break;
            }
            let j = remaining[pos];
            // Second orthogonalization pass before accepting the pivot.
            let mut next = residuals[j].clone();
            for (i, q) in basis.iter().enumerate() {
                let proj = q.dot(&next);
                next -= q * proj;
                coef[j][i] += proj;
            }
            let norm = next.norm();
            if norm <= tol {
                // The refreshed residual fell under the threshold: the
                // column is dependent after all; drop it and keep looking.
                remaining.swap_remove(pos);
                continue;
            }
            let q = next / norm;
            remaining.swap_remove(pos);
            for &r in &remaining {
                let proj = q.dot(&residuals[r]);
                residuals[r] -= &q * proj;
                coef[r].push(proj);
            }
            coef[j].push(norm); // diagonal of R
            basis.push(q);
            idx1.push(j);
        }
        remaining.sort_unstable();
        let idx2 = remaining;
        let rank = idx1.len();

        // Consistency residual of v against span(U₁).
        let mut v_rem = vs.clone();
        let mut qv = DVector::zeros(rank);
        for (i, q) in basis.iter().enumerate() {
            let proj = q.dot(&v_rem);
            v_rem -= q * proj;
            qv[i] = proj;
        }
        let residual = v_rem.norm();
        let residual_tol = RANK_TOL_REL * col_scale.max(vs.norm()).max(1.0);

        // Back-substitute through R (upper triangular in pivot order).
        let rmat = DMatrix::from_fn(rank, rank, |r, c| {
            if r <= c {
                coef[idx1[c]][r]
            } else {
                0.0
            }
        });
        let solve_r = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut x = rhs.clone();
            for r in (0..rank).rev() {
                for c in r + 1..rank {
                    let xc = x[c];
                    x[r] -= rmat[(r, c)] * xc;
                }
                x[r] /= rmat[(r, r)];
            }
            x
        };
        let pv = solve_r(&qv);
        let mut c_mat = DMatrix::zeros(rank, idx2.len());
        for (f, &j) in idx2.iter().enumerate() {
            // coef[j] holds Q′·(column j); dependent columns were fully
            // eliminated, so missing trailing entries are zero.
            let mut qu = DVector::zeros(rank);
            for (i, &x) in coef[j].iter().take(rank).enumerate() {
                qu[i] = x;
            }
            c_mat.set_column(f, &solve_r(&qu));
        }

        Self {
            idx1,
            idx2,
            pv,
            c: c_mat,
            residual,
            residual_tol,
        }
    }

    fn rank(&self) -> usize {
        self.idx1.len()
    }

    fn consistent(&self) -> bool {
        self.residual <= self.residual_tol
    }

    /// Completed-square slack g′G⁻¹g − ‖U₁⁺v‖² + rhs_quad: the sphere radius
    /// minus the squared distance from the origin to the solution set.
    fn margin(&self, rhs_quad: f64) -> f64 {
        let v_pv = self.pv.norm_squared();
        if self.idx2.is_empty() {
            return rhs_quad - v_pv;
        }
        let g = self.c.transpose() * &self.pv;
        let gmat = DMatrix::identity(self.idx2.len(), self.idx2.len())
            + self.c.transpose() * &self.c;
        let sol = gmat
            .cholesky()
            .expect("G = I + C'C is positive definite")
            .solve(&g);
        g.dot(&sol) - v_pv + rhs_quad
    }

    fn verdict(&self, rhs_quad: f64) -> AdmissibilityVerdict {
        if !self.consistent() {
            return AdmissibilityVerdict::fail(FailedCondition::RankCondition, -self.residual);
        }
        let margin = self.margin(rhs_quad);
        if margin >= -BOUNDARY_TOL {
            AdmissibilityVerdict::pass(margin)
        } else {
            AdmissibilityVerdict::fail(FailedCondition::QuadraticFormCondition, margin)
        }
    }
}

/// Conditions (ii) and (iii): linear consistency of Uy = v, then a
/// non-negative completed-square right-hand side.
pub fn theorem1_check_k(sys: &ColumnKSystem) -> AdmissibilityVerdict {
    SystemFactors::new(sys).verdict(sys.rhs_quad)
}

/// Which root of the completed square to take when the solution set has a
/// free sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignChoice {
    Positive,
    Negative,
    /// Deterministic pseudo-random sign derived from (seed, column).
    Random(u64),
}

impl SignChoice {
    fn value(self, k: usize) -> f64 {
        match self {
            SignChoice::Positive => 1.0,
            SignChoice::Negative => -1.0,
            SignChoice::Random(seed) => {
                let mut rng = derive_rng(seed, STREAM_SIGN.wrapping_add(k as u64));
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Solve Uy = v, y′y = rhs_quad for the k+2 leading entries of column k.
///
/// Requires U of full row rank k+1, leaving a single free column: the
/// completed square then reduces to a scalar z = ±√(margin/G).
pub fn solve_column_k(sys: &ColumnKSystem, sign_choice: SignChoice) -> Result<DVector<f64>> {
    let factors = SystemFactors::new(sys);
    let verdict = factors.verdict(sys.rhs_quad);
    if !verdict.admissible {
        return Err(KromError::NotAdmissible {
            condition: verdict.failed_condition,
            margin: verdict.margin,
        });
    }
    let rows = sys.u.nrows();
    if factors.rank() < rows {
        return Err(KromError::RankDeficientUnsupported {
            rank: factors.rank(),
            free_cols: sys.u.ncols() - factors.rank(),
        });
    }
    // Full row rank leaves exactly one free column j₂; U₁ is square and
    // invertible, so y₁(y₂) = U₁⁻¹(v − u₂y₂) = pv − c·y₂ from the factors.
    let j2 = factors.idx2[0];
    let c = factors.c.column(0).into_owned();
    let g_small = c.dot(&factors.pv);
    let g_big = 1.0 + c.norm_squared();
    let z = sign_choice.value(sys.k) * (verdict.margin / g_big).max(0.0).sqrt();
    let y2 = z + g_small / g_big;
    let y1 = &factors.pv - &c * y2;
    let mut y = DVector::zeros(sys.u.ncols());
    for (i, &j) in factors.idx1.iter().enumerate() {
        y[j] = y1[i];
    }
    y[j2] = y2;
    Ok(y)
}

// ---------------------------------------------------------------------------
// Zero-value shortcut.
// ---------------------------------------------------------------------------

/// Closed-form admissibility of all-zero arbitrary values, one flag per
/// column: p₁² ≤ m/6, and for k > 1, p_k² ≤ t/m + m/((k+1)(k+2)) with
/// t = s₁₁⁴ + s₂₁⁴ + s₃₁⁴ − m(m/(k+1) + p₁² + … + p_{k−1}²).
///
/// The k > 1 bound is the form implied by the completed square with the
/// quoted G and g; it agrees with [`theorem1_check_k`] on zero-value systems
/// (cross-checked exhaustively in tests), unlike the variant with
/// (k+1)(k+1) in the denominator.
pub fn zero_value_check(
    p: &DVector<f64>,
    m: usize,
    first_col: (f64, f64, f64),
) -> Result<Vec<bool>> {
    let n = p.len();
    if n == 0 {
        return Err(KromError::Dimension("empty skewness vector".into()));
    }
    let mf = m as f64;
    let mut flags = Vec::with_capacity(n);
    flags.push(p[0] * p[0] <= mf / 6.0 + BOUNDARY_TOL);
    let (s1, s2, s3) = first_col;
    let quartic = s1.powi(4) + s2.powi(4) + s3.powi(4);
    let mut cum = p[0] * p[0];
    for k in 2..=n {
        let kf = (k + 1) as f64;
        let t = quartic - mf * (mf / kf + cum);
        if t <= 0.0 {
            return Err(KromError::AssumptionViolated { t });
        }
        let bound = t / mf + mf / (kf * (kf + 1.0));
        flags.push(p[k - 1] * p[k - 1] <= bound + BOUNDARY_TOL);
        cum += p[k - 1] * p[k - 1];
    }
    Ok(flags)
}

// ---------------------------------------------------------------------------
// Whole-matrix orchestration.
// ---------------------------------------------------------------------------

/// Per-call solver options; value draws stream from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_attempts: u32,
    pub sign_choice: SignChoice,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_attempts: 200,
            sign_choice: SignChoice::Random(0),
            seed: 0,
        }
    }
}

/// A fully solved scaled-L matrix plus the attempts spent per column.
#[derive(Debug, Clone)]
pub struct SolvedColumns {
    pub s: ScaledLMatrix,
    pub attempts: Vec<u32>,
}

/// Solve all n columns sequentially for rotated skewness p, drawing and
/// adjusting arbitrary values per column until an admissible set appears.
pub fn solve_all_columns(
    p: &DVector<f64>,
    m: usize,
    source: &ValueSource,
    opts: &SolverOptions,
) -> Result<SolvedColumns> {
    let n = p.len();
    if n == 0 || m < n + 2 {
        return Err(KromError::Dimension(format!(
            "need m >= n + 2, got m = {m}, n = {n}"
        )));
    }
    check_sigma_budget(source, m)?;
    if source.is_zero() {
        return solve_zero_values(p, m, opts);
    }

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut s_partial = DMatrix::zeros(m, 0);
    let mut attempts_used = vec![0u32; n];
    for k in 1..=n {
        let count = m - (k + 2);
        let mut rng = derive_rng(opts.seed, k as u64);
        let mut solved = None;
        for attempt in 1..=opts.max_attempts {
            attempts_used[k - 1] = attempt;
            let w = match draw_adjusted(source, count, k - 1, &mut rng) {
                Ok(w) => w,
                Err(KromError::DegenerateValues) => {
                    log::debug!("column {k}: degenerate draw, retrying");
                    continue;
                }
                Err(e) => return Err(e),
            };
            match try_solve_column(&s_partial, &w, p[k - 1], m, k, opts.sign_choice) {
                Ok(col) => {
                    solved = Some(col);
                    break;
                }
                Err(KromError::NotAdmissible { .. }) => continue,
                Err(KromError::RankDeficientUnsupported { rank, free_cols }) => {
                    log::warn!(
                        "column {k}: rank-deficient system (rank {rank}, {free_cols} free), redrawing"
                    );
                    continue;
                }
                Err(e) => return Err(e),
            }
        }
        match solved {
            Some(col) => {
                s_partial = s_partial.insert_column(k - 1, 0.0);
                s_partial.set_column(k - 1, &col);
                cols.push(col);
            }
            None => {
                return Err(KromError::AdmissibilityExhausted {
                    column: k,
                    attempts: opts.max_attempts,
                })
            }
        }
    }
    Ok(SolvedColumns {
        s: ScaledLMatrix::from_columns_unchecked(cols),
        attempts: attempts_used,
    })
}

/// Deterministic all-zero-value path: Lemma 1 for column 1, then the
/// closed-form Corollary check (falling back to the general check when its
/// standing assumption t > 0 fails). A single attempt decides each column.
fn solve_zero_values(p: &DVector<f64>, m: usize, opts: &SolverOptions) -> Result<SolvedColumns> {
    let n = p.len();
    let mf = m as f64;
    let coef = Column1Coefficients::new(0.0, mf, mf * p[0])?;
    if !lemma1_check(&coef).admissible {
        return Err(KromError::AdmissibilityExhausted {
            column: 1,
            attempts: 1,
        });
    }
    let (s1, s2, s3) = solve_column1(&coef)?;
    let mut cols = vec![embed_column(&[s1, s2, s3], &vec![0.0; m - 3], m)];
    let mut s_partial = DMatrix::zeros(m, 1);
    s_partial.set_column(0, &cols[0]);
    let flags = match zero_value_check(p, m, (s1, s2, s3)) {
        Ok(f) => Some(f),
        Err(KromError::AssumptionViolated { t }) => {
            log::debug!("zero-value shortcut assumption t = {t:.3e} <= 0; using general checks");
            None
        }
        Err(e) => return Err(e),
    };
    for k in 2..=n {
        if let Some(f) = &flags {
            if !f[k - 1] {
                return Err(KromError::AdmissibilityExhausted {
                    column: k,
                    attempts: 1,
                });
            }
        }
        let w = vec![0.0; m - (k + 2)];
        match try_solve_column(&s_partial, &w, p[k - 1], m, k, opts.sign_choice) {
            Ok(col) => {
                s_partial = s_partial.insert_column(k - 1, 0.0);
                s_partial.set_column(k - 1, &col);
                cols.push(col);
            }
            Err(KromError::NotAdmissible { .. }) => {
                return Err(KromError::AdmissibilityExhausted {
                    column: k,
                    attempts: 1,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SolvedColumns {
        s: ScaledLMatrix::from_columns_unchecked(cols),
        attempts: vec![1; n],
    })
}

/// Draw `count` raw values for 0-based column `col` and standardize them to
/// mean 0, sd σ. Zero or one value cannot be standardized; the constraints
/// are unaffected by returning zeros there.
pub(crate) fn draw_adjusted<R: Rng + ?Sized>(
    source: &ValueSource,
    count: usize,
    col: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if count <= 1 {
        return Ok(vec![0.0; count]);
    }
    let z = draw_raw(source, count, col, rng)?;
    adjust_values(&z, source.sigma())
}

/// One check-then-solve pass for column k against the already-solved columns.
fn try_solve_column(
    s_partial: &DMatrix<f64>,
    w: &[f64],
    p_k: f64,
    m: usize,
    k: usize,
    sign_choice: SignChoice,
) -> Result<DVector<f64>> {
    if k == 1 {
        let coef = Column1Coefficients::from_values(w, m, p_k)?;
        let (s1, s2, s3) = solve_column1(&coef)?;
        Ok(embed_column(&[s1, s2, s3], w, m))
    } else {
        let sys = build_column_system(s_partial, w, p_k, m, k)?;
        let y = solve_column_k(&sys, sign_choice)?;
        Ok(embed_column(y.as_slice(), w, m))
    }
}

/// Stack the solved leading entries on top of the arbitrary values.
pub(crate) fn embed_column(head: &[f64], w: &[f64], m: usize) -> DVector<f64> {
    debug_assert_eq!(head.len() + w.len(), m);
    DVector::from_iterator(m, head.iter().chain(w.iter()).copied())
}

/// Guard the σ budget: Σw² = count·σ² must stay below m, which for the first
/// column (count = m − 3) requires σ² < m/(m − 3).
fn check_sigma_budget(source: &ValueSource, m: usize) -> Result<()> {
    if source.is_zero() {
        return Ok(());
    }
    let sigma = source.sigma();
    let cap = (m as f64 / (m as f64 - 3.0)).sqrt();
    if m > 3 && sigma >= cap {
        return Err(KromError::DomainError(format!(
            "sigma = {sigma} exhausts the column-1 budget: need sigma < sqrt(m/(m-3)) = {cap:.6} at m = {m}"
        )));
    }
    if sigma > 1.0 {
        log::warn!("sigma = {sigma} > 1 leaves little admissibility slack; expect high failure rates");
    }
    Ok(())
}
