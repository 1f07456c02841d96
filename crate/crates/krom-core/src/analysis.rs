//! Experiment reproduction: empirical failure-rate grids, the closed-form
//! first-column failure rate under normal arbitrary values, rolling-window
//! Kollo skewness of return series, bootstrap RMSE studies of sample moments,
//! and wall-clock benchmarking against the trial-and-error baseline.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::KromError;
use crate::krom::{krom_simulate, SolveConfig};
use crate::moments::{self, SampleMatrix, TargetMoments};
use crate::oracle;
use crate::orthobasis::build_omega;
use crate::skewsolver::{
    build_column_system, draw_adjusted, embed_column, lemma1_check, solve_all_columns,
    solve_column1, solve_column_k, theorem1_check_k, Column1Coefficients, SignChoice,
    SolverOptions,
};
use crate::stream::{derive_rng, derive_seed};
use crate::valuegen::{DistributionFamily, ValueSource};
use crate::Result;

// ---------------------------------------------------------------------------
// Empirical failure rates.
// ---------------------------------------------------------------------------

/// One grid cell of the failure-rate experiment. Rates are percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRateCell {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    pub trials: u32,
    /// Percentage of trials whose first column fails its cubic-root check.
    pub alpha1: f64,
    /// Percentage of trials failing the admissibility check of any column.
    pub alpha: f64,
    /// Trials re-run through the full solver as a cross-check.
    pub verified: u32,
    /// Verified trials whose solver outcome disagreed with the counted one.
    pub verify_mismatches: u32,
}

/// A grid of failure-rate cells, one per (n, m, σ²) combination.
pub type FailureRateReport = Vec<FailureRateCell>;

/// Estimate the failure rates alpha1 (first column) and alpha (any column)
/// over independent value draws, verifying 1% of trials against the full
/// solver.
///
/// Each trial draws one set of arbitrary values per column from the family
/// (variance-adjusted to σ = √sigma2) and runs the admissibility checks; a
/// column that passes is solved in closed form so the next column's system
/// can be assembled. No retries happen within a trial.
pub fn empirical_failure_rate(
    n: usize,
    m: usize,
    sigma2: f64,
    tau: &DVector<f64>,
    trials: u32,
    family: DistributionFamily,
    seed: u64,
) -> Result<FailureRateCell> {
    empirical_failure_rate_with_verification(n, m, sigma2, tau, trials, family, seed, 0.01)
}

/// [`empirical_failure_rate`] with an explicit solve-through fraction: the
/// first ⌈trials·verify_fraction⌉ trials are replayed through
/// [`solve_all_columns`] (one attempt, positive signs — the same streams the
/// counting pass consumed) and disagreements are tallied.
#[allow(clippy::too_many_arguments)]
pub fn empirical_failure_rate_with_verification(
    n: usize,
    m: usize,
    sigma2: f64,
    tau: &DVector<f64>,
    trials: u32,
    family: DistributionFamily,
    seed: u64,
    verify_fraction: f64,
) -> Result<FailureRateCell> {
    if n == 0 || tau.len() != n {
        return Err(KromError::Dimension(format!(
            "skewness target has length {}, expected n = {n}",
            tau.len()
        )));
    }
    if m < n + 2 {
        return Err(KromError::Dimension(format!(
            "need m >= n + 2, got m = {m}, n = {n}"
        )));
    }
    if trials == 0 {
        return Err(KromError::Dimension("need at least one trial".into()));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(KromError::DomainError(format!(
            "sigma2 must be positive and finite, got {sigma2}"
        )));
    }
    let cap = m as f64 / (m as f64 - 3.0);
    if sigma2 >= cap {
        return Err(KromError::DomainError(format!(
            "sigma2 = {sigma2} >= m/(m-3) = {cap:.6}: the first-column budget is exhausted at every draw"
        )));
    }
    if !(0.0..=1.0).contains(&verify_fraction) {
        return Err(KromError::DomainError(format!(
            "verify_fraction must lie in [0, 1], got {verify_fraction}"
        )));
    }
    let source = ValueSource::parametric(family, sigma2.sqrt())?;
    let omega = build_omega(n)?;
    let p = moments::rotate_skewness(tau, &omega)?;

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| failure_trial(&p, m, &source, derive_seed(seed, u64::from(t))))
        .collect::<Result<Vec<_>>>()?;
    let col1_failures = outcomes.iter().filter(|o| o.first_column_failed).count();
    let failures = outcomes.iter().filter(|o| o.failed).count();
    debug_assert!(col1_failures <= failures);

    let verified = ((f64::from(trials) * verify_fraction).ceil() as u32).min(trials);
    let verify_mismatches = (0..verified)
        .into_par_iter()
        .filter(|&t| {
            let opts = SolverOptions {
                max_attempts: 1,
                sign_choice: SignChoice::Positive,
                seed: derive_seed(seed, u64::from(t)),
            };
            let solver_failed = solve_all_columns(&p, m, &source, &opts).is_err();
            solver_failed != outcomes[t as usize].failed
        })
        .count() as u32;

    let pct = |count: usize| 100.0 * count as f64 / f64::from(trials);
    Ok(FailureRateCell {
        n,
        m,
        sigma2,
        trials,
        alpha1: pct(col1_failures),
        alpha: pct(failures),
        verified,
        verify_mismatches,
    })
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    first_column_failed: bool,
    failed: bool,
}

/// One counting trial: draw each column's values once, run the column's
/// admissibility check, and solve only as far as needed to assemble the next
/// system. The final column is checked but never solved.
fn failure_trial(
    p: &DVector<f64>,
    m: usize,
    source: &ValueSource,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    let n = p.len();
    let failed_at = |first_column: bool| TrialOutcome {
        first_column_failed: first_column,
        failed: true,
    };
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..=n {
        let count = m - (k + 2);
        let mut rng = derive_rng(trial_seed, k as u64);
        let w = match draw_adjusted(source, count, k - 1, &mut rng) {
            Ok(w) => w,
            Err(KromError::DegenerateValues) => return Ok(failed_at(false)),
            Err(e) => return Err(e),
        };
        if k == 1 {
            let coef = Column1Coefficients::from_values(&w, m, p[0])?;
            if !lemma1_check(&coef).admissible {
                return Ok(failed_at(true));
            }
            if k < n {
                let (s1, s2, s3) = solve_column1(&coef)?;
                cols.push(embed_column(&[s1, s2, s3], &w, m));
            }
        } else {
            let s_partial = DMatrix::from_fn(m, cols.len(), |r, j| cols[j][r]);
            let sys = build_column_system(&s_partial, &w, p[k - 1], m, k)?;
            if !theorem1_check_k(&sys).admissible {
                return Ok(failed_at(false));
            }
            if k < n {
                let y = match solve_column_k(&sys, SignChoice::Positive) {
                    Ok(y) => y,
                    // Exactly dependent columns are a measure-zero event for
                    // continuous sources; fall back to the dense solver so
                    // the trial can continue past them.
                    Err(KromError::RankDeficientUnsupported { .. }) => {
                        match oracle::dense_quadratic_solve(&sys).witness {
                            Some(y) => y,
                            None => return Ok(failed_at(false)),
                        }
                    }
                    Err(e) => return Err(e),
                };
                cols.push(embed_column(y.as_slice(), &w, m));
            }
        }
    }
    Ok(TrialOutcome {
        first_column_failed: false,
        failed: false,
    })
}

// ---------------------------------------------------------------------------
// Theoretical first-column failure rate under normal arbitrary values.
// ---------------------------------------------------------------------------

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Probability that one draw of N(0, σ²) arbitrary values (variance-adjusted)
/// leaves the first-column system unsolvable at rotated skewness p₁.
///
/// After the adjustment the only randomness left is the third sample moment
/// M₃, asymptotically N(0, 6(m−5)/(m(m−2))·σ⁶); solvability is the event
/// p₁q − √((m−3)/6·(q−σ²)³) ≤ M₃ ≤ p₁q + √((m−3)/6·(q−σ²)³) with
/// q = m/(m−3), giving h(σ) = 1 − (Φ(I_U) − Φ(I_L)) for 0 < σ ≤ √q. At σ = 0
/// the values are exactly zero, which is admissible iff p₁² ≤ m/6.
pub fn theoretical_failure_rate_col1(sigma: f64, m: usize, p1: f64) -> Result<f64> {
    if m <= 5 {
        return Err(KromError::DomainError(format!(
            "the third-moment variance formula needs m > 5, got m = {m}"
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) || !p1.is_finite() {
        return Err(KromError::DomainError(format!(
            "need finite sigma >= 0 and finite p1, got sigma = {sigma}, p1 = {p1}"
        )));
    }
    let mf = m as f64;
    let q = mf / (mf - 3.0);
    let s2 = sigma * sigma;
    // One relative ulp of slack so sigma = sqrt(q) computed in floating point
    // lands on the boundary instead of outside the domain.
    if s2 > q * (1.0 + 1e-12) {
        return Err(KromError::DomainError(format!(
            "sigma^2 = {s2} exceeds the admissible budget q = m/(m-3) = {q:.6}"
        )));
    }
    if sigma == 0.0 {
        return Ok(if p1 * p1 <= mf / 6.0 { 0.0 } else { 1.0 });
    }
    let scale = (mf * (mf - 2.0) / (6.0 * (mf - 5.0))).sqrt() / sigma.powi(3);
    let half_width = ((mf - 3.0) / 6.0 * (q - s2).max(0.0).powi(3)).sqrt();
    let upper = scale * (p1 * q + half_width);
    let lower = scale * (p1 * q - half_width);
    Ok((1.0 - (phi(upper) - phi(lower))).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Rolling-window Kollo skewness.
// ---------------------------------------------------------------------------

/// One rolling-window measurement; `tau`/`p` are absent when the window's
/// covariance is singular.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingPoint {
    /// 1-based index of the last observation inside the window.
    pub end: usize,
    pub tau: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
}

/// Kollo skewness and its rotated counterpart over every length-`window`
/// row window of `returns`, stepping one row at a time.
pub fn rolling_kollo(returns: &SampleMatrix, window: usize) -> Result<Vec<RollingPoint>> {
    let (rows, n) = (returns.rows(), returns.cols());
    let min = n + 2;
    if window < min || window > rows {
        return Err(KromError::WindowTooLarge {
            window,
            rows,
            cols: n,
            min,
        });
    }
    let omega = build_omega(n)?;
    let mut points = Vec::with_capacity(rows - window + 1);
    for end in window..=rows {
        let slice = returns.row_window(end - window, window)?;
        match moments::kollo_skewness(&slice) {
            Ok(tau) => {
                let p = moments::rotate_skewness(&tau, &omega)?;
                points.push(RollingPoint {
                    end,
                    tau: Some(tau.iter().copied().collect()),
                    p: Some(p.iter().copied().collect()),
                });
            }
            Err(KromError::SingularCovariance(_)) => points.push(RollingPoint {
                end,
                tau: None,
                p: None,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Bootstrap RMSE study.
// ---------------------------------------------------------------------------

/// Mean, standard error (sample standard deviation across replications), and
/// their ratio for one RMSE column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseStats {
    pub mean: f64,
    pub standard_error: f64,
    /// mean / standard_error; 0 when both vanish (exact-moment sources).
    pub ratio: f64,
}

impl RmseStats {
    fn from_values(values: &[f64]) -> Self {
        let (mean, sd) = mean_sd(values);
        let ratio = if sd > 0.0 {
            mean / sd
        } else if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            standard_error: sd,
            ratio,
        }
    }
}

/// Sampling-error study of the three moment RMSEs over bootstrap
/// replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub m: usize,
    pub replications: usize,
    pub rmse_mean: RmseStats,
    pub rmse_cov: RmseStats,
    pub rmse_kollo: RmseStats,
}

/// Row-resampling policy for [`bootstrap_rmse_study_mode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// Draw m whole rows uniformly with replacement.
    Replacement,
    /// Identity resample of the full source — a test hook whose RMSEs must
    /// all be zero.
    FullSample,
}

/// Root-sum-of-squares distances between a sample's moments and the targets:
/// ‖μ̂ − μ‖₂, ‖V̂ − V‖_F, ‖τ̂ − τ‖₂.
pub fn rmse_against_targets(
    sample: &SampleMatrix,
    target: &TargetMoments,
) -> Result<(f64, f64, f64)> {
    if sample.cols() != target.n() {
        return Err(KromError::Dimension(format!(
            "sample has {} variables, targets have {}",
            sample.cols(),
            target.n()
        )));
    }
    let (mu, v) = moments::sample_mean_cov(sample)?;
    let tau = moments::kollo_skewness(sample)?;
    Ok((
        (mu - target.mu()).norm(),
        (v - target.v()).norm(),
        (tau - target.tau()).norm(),
    ))
}

/// Bootstrap (rows with replacement) RMSE study against the source's own
/// moments.
pub fn bootstrap_rmse_study(
    source: &SampleMatrix,
    m: usize,
    replications: usize,
    seed: u64,
) -> Result<RmseReport> {
    bootstrap_rmse_study_mode(source, m, replications, ResampleMode::Replacement, seed)
}

/// [`bootstrap_rmse_study`] with an explicit resampling mode.
pub fn bootstrap_rmse_study_mode(
    source: &SampleMatrix,
    m: usize,
    replications: usize,
    mode: ResampleMode,
    seed: u64,
) -> Result<RmseReport> {
    if replications < 2 {
        return Err(KromError::Dimension(format!(
            "need at least 2 replications for a standard error, got {replications}"
        )));
    }
    if m < 2 {
        return Err(KromError::Dimension(format!(
            "resamples need at least 2 rows for a covariance, got m = {m}"
        )));
    }
    if mode == ResampleMode::FullSample && m != source.rows() {
        return Err(KromError::Dimension(format!(
            "full-sample mode requires m = source rows = {}, got m = {m}",
            source.rows()
        )));
    }
    let target = TargetMoments::from_sample(source)?;
    let triples: Vec<(f64, f64, f64)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let resampled = match mode {
                ResampleMode::Replacement => {
                    let mut rng = derive_rng(seed, r as u64);
                    resample_rows(source, m, &mut rng)?
                }
                ResampleMode::FullSample => source.clone(),
            };
            rmse_against_targets(&resampled, &target)
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { triples.iter().map(f).collect() };
    Ok(RmseReport {
        m,
        replications,
        rmse_mean: RmseStats::from_values(&column(|t| t.0)),
        rmse_cov: RmseStats::from_values(&column(|t| t.1)),
        rmse_kollo: RmseStats::from_values(&column(|t| t.2)),
    })
}

fn resample_rows<R: Rng + ?Sized>(
    source: &SampleMatrix,
    m: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    let data = source.matrix();
    let mut out = DMatrix::zeros(m, data.ncols());
    for i in 0..m {
        let j = rng.gen_range(0..data.nrows());
        out.set_row(i, &data.row(j));
    }
    SampleMatrix::new(out)
}

// ---------------------------------------------------------------------------
// Timing benchmark.
// ---------------------------------------------------------------------------

/// Wall-clock comparison of the closed-form engine against the
/// trial-and-error baseline over a list of skewness targets (times in
/// seconds; means and sds over targets where both methods succeeded).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub n: usize,
    pub m: usize,
    pub targets: usize,
    pub krom_mean: f64,
    pub krom_sd: f64,
    pub baseline_mean: f64,
    pub baseline_sd: f64,
    /// baseline_mean / krom_mean.
    pub ratio: f64,
    pub krom_ok: Vec<bool>,
    pub baseline_ok: Vec<bool>,
}

/// Time both methods over the targets at mean 0, covariance I, with normal
/// arbitrary values at σ² = 0.7. Targets are run sequentially so the two
/// measurements never contend for cores; failures (an exhausted attempt or
/// trial budget) are recorded and excluded from the averages.
pub fn bench_timing(
    n: usize,
    m: usize,
    targets: &[DVector<f64>],
    seed: u64,
) -> Result<TimingReport> {
    if n == 0 || m < n + 2 {
        return Err(KromError::Dimension(format!(
            "need m >= n + 2, got m = {m}, n = {n}"
        )));
    }
    if targets.is_empty() {
        return Err(KromError::Dimension("need at least one target".into()));
    }
    if let Some(i) = targets.iter().position(|t| t.len() != n) {
        return Err(KromError::Dimension(format!(
            "target {i} has length {}, expected n = {n}",
            targets[i].len()
        )));
    }
    let family = DistributionFamily::Normal {
        mu: 0.0,
        sigma: 1.0,
    };
    let source = ValueSource::parametric(family, 0.7_f64.sqrt())?;
    let mu = DVector::zeros(n);
    let v = DMatrix::identity(n, n);

    let mut krom_times: Vec<Option<f64>> = Vec::with_capacity(targets.len());
    let mut baseline_times: Vec<Option<f64>> = Vec::with_capacity(targets.len());
    for (i, tau) in targets.iter().enumerate() {
        let target = TargetMoments::new(mu.clone(), v.clone(), tau.clone())?;

        let config = SolveConfig::new(m, source.clone(), derive_seed(seed, 2 * i as u64));
        let t0 = Instant::now();
        let outcome = krom_simulate(&target, &config);
        let elapsed = t0.elapsed().as_secs_f64();
        krom_times.push(match outcome {
            Ok(_) => Some(elapsed),
            Err(KromError::AdmissibilityExhausted { .. }) => None,
            Err(e) => return Err(e),
        });

        let t0 = Instant::now();
        let outcome = oracle::trial_and_error_baseline(
            &target,
            m,
            &source,
            config.max_attempts,
            derive_seed(seed, 2 * i as u64 + 1),
        );
        let elapsed = t0.elapsed().as_secs_f64();
        baseline_times.push(match outcome {
            Ok(_) => Some(elapsed),
            Err(KromError::TrialsExhausted { .. }) => None,
            Err(e) => return Err(e),
        });
    }

    let pairs: Vec<(f64, f64)> = krom_times
        .iter()
        .zip(&baseline_times)
        .filter_map(|(k, b)| k.zip(*b))
        .collect();
    if pairs.is_empty() {
        return Err(KromError::DomainError(
            "no target was solved by both methods; the timing ratio is undefined".into(),
        ));
    }
    let (krom_mean, krom_sd) = mean_sd(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (baseline_mean, baseline_sd) = mean_sd(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(TimingReport {
        n,
        m,
        targets: targets.len(),
        krom_mean,
        krom_sd,
        baseline_mean,
        baseline_sd,
        ratio: baseline_mean / krom_mean,
        krom_ok: krom_times.iter().map(Option::is_some).collect(),
        baseline_ok: baseline_times.iter().map(Option::is_some).collect(),
    })
}

/// Sample mean and standard deviation (n − 1 divisor; 0 below two values).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn normal_family() -> DistributionFamily {
        DistributionFamily::Normal {
            mu: 0.0,
            sigma: 1.0,
        }
    }

    fn zero_tau(n: usize) -> DVector<f64> {
        DVector::zeros(n)
    }

    // --- empirical failure rate ---------------------------------------------

    #[test]
    fn tiny_sigma_never_fails() {
        let cell = empirical_failure_rate(
            5,
            500,
            1e-4,
            &zero_tau(5),
            2_000,
            normal_family(),
            0x5eed_0001,
        )
        .unwrap();
        assert!(cell.alpha <= 0.2, "alpha = {}", cell.alpha);
        assert!(cell.alpha1 <= cell.alpha);
        assert_eq!(cell.verify_mismatches, 0);
    }

    #[test]
    fn moderate_sigma_matches_reference_rate() {
        // n = 5, m = 500, sigma^2 = 0.6 has a full-system failure rate near
        // 0.17%; allow ±0.5 pp around it.
        let cell = empirical_failure_rate(
            5,
            500,
            0.6,
            &zero_tau(5),
            10_000,
            normal_family(),
            0x5eed_0002,
        )
        .unwrap();
        assert!(
            cell.alpha <= 0.67,
            "alpha = {} outside reference band",
            cell.alpha
        );
        assert!(cell.alpha1 <= cell.alpha);
        assert_eq!(cell.verified, 100);
        assert_eq!(cell.verify_mismatches, 0);
    }

    #[test]
    fn high_sigma_high_dimension_almost_always_fails() {
        let cell = empirical_failure_rate(
            20,
            1_000,
            0.9,
            &zero_tau(20),
            1_000,
            normal_family(),
            0x5eed_0003,
        )
        .unwrap();
        assert!(cell.alpha >= 99.0, "alpha = {}", cell.alpha);
    }

    #[test]
    fn alpha_is_monotone_in_sigma_and_dimension() {
        let lo = empirical_failure_rate(
            5,
            50,
            0.7,
            &zero_tau(5),
            2_000,
            normal_family(),
            0x5eed_0004,
        )
        .unwrap();
        let hi = empirical_failure_rate(
            5,
            50,
            0.9,
            &zero_tau(5),
            2_000,
            normal_family(),
            0x5eed_0004,
        )
        .unwrap();
        assert!(
            hi.alpha > lo.alpha + 10.0,
            "sigma^2 0.7 -> {}, 0.9 -> {}",
            lo.alpha,
            hi.alpha
        );

        let narrow = empirical_failure_rate(
            5,
            1_000,
            0.9,
            &zero_tau(5),
            500,
            normal_family(),
            0x5eed_0005,
        )
        .unwrap();
        let wide = empirical_failure_rate(
            20,
            1_000,
            0.9,
            &zero_tau(20),
            500,
            normal_family(),
            0x5eed_0005,
        )
        .unwrap();
        assert!(
            wide.alpha >= narrow.alpha,
            "n = 5 -> {}, n = 20 -> {}",
            narrow.alpha,
            wide.alpha
        );
    }

    #[test]
    fn full_verification_agrees_with_solver() {
        let tau = DVector::from_vec(vec![0.5, -0.3, 0.2, 0.0]);
        let cell = empirical_failure_rate_with_verification(
            4,
            30,
            0.8,
            &tau,
            300,
            normal_family(),
            0x5eed_0006,
            1.0,
        )
        .unwrap();
        assert_eq!(cell.verified, 300);
        assert_eq!(cell.verify_mismatches, 0);
        // A mid-range rate so both outcomes are actually exercised.
        assert!(cell.alpha > 1.0 && cell.alpha < 99.0, "alpha = {}", cell.alpha);
    }

    #[test]
    fn failure_rate_rejects_bad_inputs() {
        let e = empirical_failure_rate(5, 6, 0.5, &zero_tau(5), 10, normal_family(), 1);
        assert!(matches!(e, Err(KromError::Dimension(_))));
        let e = empirical_failure_rate(5, 500, 0.5, &zero_tau(4), 10, normal_family(), 1);
        assert!(matches!(e, Err(KromError::Dimension(_))));
        let e = empirical_failure_rate(5, 50, 50.0 / 47.0, &zero_tau(5), 10, normal_family(), 1);
        assert!(matches!(e, Err(KromError::DomainError(_))));
        let e = empirical_failure_rate(5, 500, 0.5, &zero_tau(5), 0, normal_family(), 1);
        assert!(matches!(e, Err(KromError::Dimension(_))));
    }

    // --- theoretical failure rate -------------------------------------------

    #[test]
    fn theoretical_rate_limits_and_domain() {
        assert_eq!(theoretical_failure_rate_col1(0.0, 50, 0.0).unwrap(), 0.0);
        // p1^2 > m/6 makes zero values inadmissible.
        let p_big = (50.0_f64 / 6.0).sqrt() + 0.01;
        assert_eq!(theoretical_failure_rate_col1(0.0, 50, p_big).unwrap(), 1.0);
        // At sigma^2 = q the interval collapses and failure is certain.
        let q: f64 = 50.0 / 47.0;
        assert_abs_diff_eq!(
            theoretical_failure_rate_col1(q.sqrt(), 50, 0.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            theoretical_failure_rate_col1(0.5, 5, 0.0),
            Err(KromError::DomainError(_))
        ));
        assert!(matches!(
            theoretical_failure_rate_col1((q + 0.01).sqrt(), 50, 0.0),
            Err(KromError::DomainError(_))
        ));
        assert!(matches!(
            theoretical_failure_rate_col1(-0.1, 50, 0.0),
            Err(KromError::DomainError(_))
        ));
    }

    #[test]
    fn theoretical_rate_is_monotone_in_sigma() {
        let q = (50.0 / 47.0_f64).sqrt();
        let mut last = 0.0;
        for i in 1..=200 {
            let sigma = q * i as f64 / 200.0;
            let h = theoretical_failure_rate_col1(sigma, 50, 0.0).unwrap();
            assert!(
                h >= last - 1e-12,
                "h({sigma}) = {h} < previous {last}"
            );
            last = h;
        }
        assert_abs_diff_eq!(last, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn theoretical_rate_matches_empirical_first_column() {
        // Column-1 failures depend only on p1, so a univariate grid cell
        // isolates them; at m = 50, sigma^2 = 0.9 the rate is near 50%.
        let h = theoretical_failure_rate_col1(0.9_f64.sqrt(), 50, 0.0).unwrap();
        let cell = empirical_failure_rate(
            1,
            50,
            0.9,
            &zero_tau(1),
            10_000,
            normal_family(),
            0x5eed_0007,
        )
        .unwrap();
        assert!(
            (100.0 * h - cell.alpha1).abs() <= 2.0,
            "theory {:.2}% vs empirical {:.2}%",
            100.0 * h,
            cell.alpha1
        );
    }

    // --- rolling windows ------------------------------------------------------

    #[test]
    fn rolling_constant_returns_are_missing() {
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![1.0, 2.0]).collect();
        let sample = SampleMatrix::from_rows(&rows).unwrap();
        let points = rolling_kollo(&sample, 10).unwrap();
        assert_eq!(points.len(), 11);
        assert!(points.iter().all(|p| p.tau.is_none() && p.p.is_none()));
        assert_eq!(points[0].end, 10);
        assert_eq!(points.last().unwrap().end, 20);
    }

    #[test]
    fn rolling_full_window_matches_direct_measurement() {
        let mut rng = derive_rng(41, 0);
        let data = DMatrix::from_fn(30, 3, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let sample = SampleMatrix::new(data).unwrap();
        let points = rolling_kollo(&sample, 30).unwrap();
        assert_eq!(points.len(), 1);
        let direct = moments::kollo_skewness(&sample).unwrap();
        let omega = build_omega(3).unwrap();
        let p_direct = moments::rotate_skewness(&direct, &omega).unwrap();
        let point = &points[0];
        for j in 0..3 {
            assert_abs_diff_eq!(point.tau.as_ref().unwrap()[j], direct[j], epsilon = 1e-12);
            assert_abs_diff_eq!(point.p.as_ref().unwrap()[j], p_direct[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn rolling_window_bounds_are_enforced() {
        let mut rng = derive_rng(42, 0);
        let data = DMatrix::from_fn(30, 3, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let sample = SampleMatrix::new(data).unwrap();
        assert!(matches!(
            rolling_kollo(&sample, 4),
            Err(KromError::WindowTooLarge { min: 5, .. })
        ));
        assert!(matches!(
            rolling_kollo(&sample, 31),
            Err(KromError::WindowTooLarge { rows: 30, .. })
        ));
    }

    #[test]
    fn rolling_symmetric_data_keeps_p1_small() {
        let mut rng = derive_rng(43, 0);
        let data = DMatrix::from_fn(400, 3, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let sample = SampleMatrix::new(data).unwrap();
        let points = rolling_kollo(&sample, 250).unwrap();
        assert_eq!(points.len(), 151);
        let mut p1: Vec<f64> = points
            .iter()
            .map(|pt| pt.p.as_ref().unwrap()[0].abs())
            .collect();
        p1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = p1[p1.len() / 2];
        assert!(median < 0.5, "median |p1| = {median}");
    }

    // --- bootstrap RMSE -------------------------------------------------------

    fn skewed_source(rows: usize, seed: u64) -> SampleMatrix {
        let mut rng = derive_rng(seed, 0);
        let data = DMatrix::from_fn(rows, 3, |_, j| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z * z + 0.1 * j as f64
        });
        SampleMatrix::new(data).unwrap()
    }

    #[test]
    fn full_sample_mode_reports_zero_rmse() {
        let source = skewed_source(50, 44);
        let report =
            bootstrap_rmse_study_mode(&source, 50, 5, ResampleMode::FullSample, 1).unwrap();
        for stats in [&report.rmse_mean, &report.rmse_cov, &report.rmse_kollo] {
            assert_abs_diff_eq!(stats.mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(stats.standard_error, 0.0, epsilon = 1e-10);
            assert_eq!(stats.ratio, 0.0);
        }
        assert!(matches!(
            bootstrap_rmse_study_mode(&source, 49, 5, ResampleMode::FullSample, 1),
            Err(KromError::Dimension(_))
        ));
        assert!(matches!(
            bootstrap_rmse_study(&source, 50, 1, 1),
            Err(KromError::Dimension(_))
        ));
    }

    #[test]
    fn bootstrap_rmse_shrinks_with_sample_size() {
        let source = skewed_source(720, 45);
        let reports: Vec<RmseReport> = [100usize, 500, 1000]
            .iter()
            .map(|&m| bootstrap_rmse_study(&source, m, 60, 0x5eed_0008).unwrap())
            .collect();
        for pair in reports.windows(2) {
            assert!(
                pair[1].rmse_mean.mean < pair[0].rmse_mean.mean,
                "mean RMSE must shrink: {} -> {}",
                pair[0].rmse_mean.mean,
                pair[1].rmse_mean.mean
            );
            assert!(pair[1].rmse_cov.mean < pair[0].rmse_cov.mean);
            assert!(pair[1].rmse_kollo.mean < pair[0].rmse_kollo.mean);
        }
        for report in &reports {
            for stats in [&report.rmse_mean, &report.rmse_cov, &report.rmse_kollo] {
                assert!(stats.mean > 0.0);
                assert!(stats.ratio.is_finite() && stats.ratio > 0.0);
            }
        }
    }

    #[test]
    fn generated_samples_have_zero_rmse() {
        let mu = DVector::from_vec(vec![0.1, 0.0, -0.1]);
        let v = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.8],
        );
        let tau = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let target = TargetMoments::new(mu, v, tau).unwrap();
        let source = ValueSource::parametric(normal_family(), 0.5).unwrap();
        let sample = krom_simulate(&target, &SolveConfig::new(60, source, 46)).unwrap();
        let (r_mu, r_v, r_tau) = rmse_against_targets(&sample.x, &target).unwrap();
        assert!(r_mu < 1e-8 && r_v < 1e-8 && r_tau < 1e-7, "({r_mu}, {r_v}, {r_tau})");
    }

    // --- timing benchmark -------------------------------------------------------

    #[test]
    fn bench_records_successes_and_is_deterministic() {
        let targets = vec![zero_tau(3); 3];
        let report = bench_timing(3, 20, &targets, 47).unwrap();
        assert_eq!(report.targets, 3);
        assert!(report.krom_ok.iter().all(|&ok| ok));
        assert!(report.baseline_ok.iter().all(|&ok| ok));
        assert!(report.krom_mean > 0.0 && report.baseline_mean > 0.0);
        assert!(report.ratio.is_finite() && report.ratio > 0.0);

        let again = bench_timing(3, 20, &targets, 47).unwrap();
        assert_eq!(report.krom_ok, again.krom_ok);
        assert_eq!(report.baseline_ok, again.baseline_ok);
    }

    #[test]
    fn bench_random_targets_run_end_to_end() {
        let mut rng = derive_rng(48, 0);
        let targets: Vec<DVector<f64>> = (0..10)
            .map(|_| DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let report = bench_timing(5, 25, &targets, 49).unwrap();
        let both = report
            .krom_ok
            .iter()
            .zip(&report.baseline_ok)
            .filter(|(k, b)| **k && **b)
            .count();
        assert!(both >= 5, "only {both} of 10 targets solved by both");
        assert!(report.ratio.is_finite() && report.ratio > 0.0);
    }

    #[test]
    fn bench_rejects_bad_targets() {
        assert!(matches!(
            bench_timing(3, 20, &[], 1),
            Err(KromError::Dimension(_))
        ));
        let wrong = vec![zero_tau(4)];
        assert!(matches!(
            bench_timing(3, 20, &wrong, 1),
            Err(KromError::Dimension(_))
        ));
    }
}
