//! Arbitrary-value generation for the undetermined column entries.
//!
//! Values come from one of three sources — all zeros, a bootstrap of an
//! empirical scaled-L matrix, or i.i.d. draws from a parametric family —
//! and are then standardized to mean 0 and population sd σ, so the energy
//! they consume from each column's quadratic budget is exactly count·σ².
//! The parametric constructors solve for family parameters that hit a
//! prescribed skewness at zero mean and unit variance.

use crate::orthobasis::ScaledLMatrix;
use crate::{KromError, Result};
use rand::Rng;
use rand_distr::Distribution;

/// Univariate families available for value draws, with their natural
/// parameterizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionFamily {
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// Location-scale Student t with ν degrees of freedom. ν > 6 keeps the
    /// sixth moment finite (relevant to failure-rate theory); ν ∈ (3, 6]
    /// is permitted with a warning.
    StudentT {
        mu: f64,
        sigma: f64,
        nu: f64,
    },
    /// Skew-normal with location ξ, scale ω, shape α.
    SkewNormal {
        xi: f64,
        omega: f64,
        alpha: f64,
    },
    /// Normal-inverse-Gaussian NIG(α, β, δ, μ): tail α, asymmetry β,
    /// scale δ, location μ.
    Nig {
        alpha: f64,
        beta: f64,
        delta: f64,
        mu: f64,
    },
    /// Four-parameter (scaled/shifted) beta on [b, c] with shape (α, β).
    Beta4 {
        alpha: f64,
        beta: f64,
        b: f64,
        c: f64,
    },
}

impl DistributionFamily {
    /// Check family-specific parameter domains.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(KromError::DomainError(msg));
        match *self {
            Self::Normal { sigma, .. } if !(sigma > 0.0 && sigma.is_finite()) => {
                fail(format!("Normal needs sigma > 0, got {sigma}"))
            }
            Self::StudentT { sigma, nu, .. } if !(sigma > 0.0 && nu > 3.0) => fail(format!(
                "StudentT needs sigma > 0 and nu > 3 (finite skewness), got sigma = {sigma}, nu = {nu}"
            )),
            Self::SkewNormal { omega, alpha, .. }
                if !(omega > 0.0 && omega.is_finite() && alpha.is_finite()) =>
            {
                fail(format!("SkewNormal needs omega > 0, got omega = {omega}"))
            }
            Self::Nig {
                alpha, beta, delta, ..
            } if !(delta > 0.0 && alpha > beta.abs()) => fail(format!(
                "NIG needs delta > 0 and alpha > |beta|, got alpha = {alpha}, beta = {beta}, delta = {delta}"
            )),
            Self::Beta4 { alpha, beta, b, c } if !(alpha > 0.0 && beta > 0.0 && c > b) => {
                fail(format!(
                    "Beta4 needs alpha, beta > 0 and c > b, got ({alpha}, {beta}, {b}, {c})"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Draw `count` i.i.d. values.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let bad = |what: &str| KromError::DomainError(format!("cannot construct {what} sampler"));
        match *self {
            Self::Normal { mu, sigma } => {
                let d = rand_distr::Normal::new(mu, sigma).map_err(|_| bad("Normal"))?;
                Ok(d.sample_iter(rng).take(count).collect())
            }
            Self::StudentT { mu, sigma, nu } => {
                if nu <= 6.0 {
                    log::warn!("StudentT nu = {nu} <= 6: sixth moment infinite");
                }
                let d = rand_distr::StudentT::new(nu).map_err(|_| bad("StudentT"))?;
                Ok(d.sample_iter(rng).take(count).map(|t| mu + sigma * t).collect())
            }
            Self::SkewNormal { xi, omega, alpha } => {
                let d = rand_distr::SkewNormal::new(xi, omega, alpha)
                    .map_err(|_| bad("SkewNormal"))?;
                Ok(d.sample_iter(rng).take(count).collect())
            }
            Self::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => {
                // X ~ NIG(α, β, δ, μ) ⇔ X = μ + δ·Y with Y ~ NIG(αδ, βδ, 1, 0).
                let d = rand_distr::NormalInverseGaussian::new(alpha * delta, beta * delta)
                    .map_err(|_| bad("NIG"))?;
                Ok(d.sample_iter(rng).take(count).map(|y| mu + delta * y).collect())
            }
            Self::Beta4 { alpha, beta, b, c } => {
                let d = rand_distr::Beta::new(alpha, beta).map_err(|_| bad("Beta"))?;
                Ok(d.sample_iter(rng).take(count).map(|u| b + (c - b) * u).collect())
            }
        }
    }
}

/// Where arbitrary values come from.
#[derive(Debug, Clone)]
pub enum SourceKind {
    Zero,
    Bootstrap(ScaledLMatrix),
    Parametric(DistributionFamily),
}

/// A value source plus the σ used by the variance adjustment.
#[derive(Debug, Clone)]
pub struct ValueSource {
    kind: SourceKind,
    sigma: f64,
}

impl ValueSource {
    /// All-zero values (σ is irrelevant).
    pub fn zero() -> Self {
        Self {
            kind: SourceKind::Zero,
            sigma: 0.0,
        }
    }

    /// Bootstrap with replacement from the columns of an empirical scaled-L
    /// matrix.
    pub fn bootstrap(source: ScaledLMatrix, sigma: f64) -> Result<Self> {
        Self::with_sigma(SourceKind::Bootstrap(source), sigma)
    }

    /// I.i.d. draws from a parametric family.
    pub fn parametric(family: DistributionFamily, sigma: f64) -> Result<Self> {
        family.validate()?;
        Self::with_sigma(SourceKind::Parametric(family), sigma)
    }

    fn with_sigma(kind: SourceKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(KromError::DomainError(format!(
                "adjustment sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { kind, sigma })
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SourceKind::Zero)
    }
}

/// Draw `count` raw (pre-adjustment) values for 0-based column
/// `column_index`. Bootstrap resamples the matching source column with
/// replacement; columns are drawn independently of each other.
pub fn draw_raw<R: Rng + ?Sized>(
    source: &ValueSource,
    count: usize,
    column_index: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match source.kind() {
        SourceKind::Zero => Ok(vec![0.0; count]),
        SourceKind::Bootstrap(s) => {
            if column_index >= s.cols() {
                return Err(KromError::SourceTooNarrow {
                    requested: column_index,
                    available: s.cols(),
                });
            }
            let col = s.column(column_index);
            let rows = s.rows();
            Ok((0..count).map(|_| col[rng.gen_range(0..rows)]).collect())
        }
        SourceKind::Parametric(family) => family.sample(count, rng),
    }
}

/// Standardize values to mean 0 and *population* sd σ:
/// w_i = σ(z_i − z̄)/s_z.
pub fn adjust_values(z: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if z.len() < 2 {
        return Err(KromError::Dimension(format!(
            "variance adjustment needs at least 2 values, got {}",
            z.len()
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(KromError::DomainError(format!(
            "adjustment sigma must be positive and finite, got {sigma}"
        )));
    }
    let count = z.len() as f64;
    let mean = z.iter().sum::<f64>() / count;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
    if var == 0.0 || !var.is_finite() {
        return Err(KromError::DegenerateValues);
    }
    let s = var.sqrt();
    Ok(z.iter().map(|x| sigma * (x - mean) / s).collect())
}

// ---------------------------------------------------------------------------
// Skewness-matched parameters (zero mean, unit variance, skewness p₁).
// ---------------------------------------------------------------------------

/// Largest |skewness| a skew-normal can reach is ≈ 0.9953; targets are
/// accepted strictly inside ±0.995.
pub const SN_SKEW_LIMIT: f64 = 0.995;

/// Skewness of a skew-normal as a function of δ = α/√(1+α²):
/// √2(4−π)δ³/(π − 2δ²)^{3/2}.
fn sn_skewness_of_delta(delta: f64) -> f64 {
    use std::f64::consts::PI;
    std::f64::consts::SQRT_2 * (4.0 - PI) * delta.powi(3) / (PI - 2.0 * delta * delta).powf(1.5)
}

/// Skew-normal (ξ, ω, α) with mean 0, variance 1, skewness p1.
pub fn sn_params_for_skewness(p1: f64) -> Result<(f64, f64, f64)> {
    use std::f64::consts::PI;
    if !p1.is_finite() || p1.abs() >= SN_SKEW_LIMIT {
        return Err(KromError::SkewnessOutOfRange {
            p1,
            lo: -SN_SKEW_LIMIT,
            hi: SN_SKEW_LIMIT,
        });
    }
    if p1 == 0.0 {
        return Ok((0.0, 1.0, 0.0));
    }
    // Monotone bisection for δ ∈ (−1, 1).
    let (mut lo, mut hi) = (-1.0 + 1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sn_skewness_of_delta(mid) < p1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    let alpha = delta / (1.0 - delta * delta).sqrt();
    let omega = (1.0 - 2.0 * delta * delta / PI).powf(-0.5);
    let xi = -omega * delta * (2.0 / PI).sqrt();
    Ok((xi, omega, alpha))
}

/// NIG (α, β, δ, μ) with mean 0, variance 1, skewness p1 ≠ 0:
/// β = p1/3, α = √(β² + 3β/p1), γ = √(α² − β²), δ = γ³/α², μ = −δβ/γ.
pub fn nig_params_for_skewness(p1: f64) -> Result<(f64, f64, f64, f64)> {
    if !p1.is_finite() || p1 == 0.0 {
        return Err(KromError::DomainError(
            "NIG skewness match needs p1 != 0 (use Normal for the symmetric case)".into(),
        ));
    }
    let beta = p1 / 3.0;
    let alpha = (beta * beta + 3.0 * beta / p1).sqrt(); // 3β/p1 = 1 identically
    let gamma = (alpha * alpha - beta * beta).sqrt();
    let delta = gamma.powi(3) / (alpha * alpha);
    let mu = -delta * beta / gamma;
    Ok((alpha, beta, delta, mu))
}

/// Four-parameter beta (α, β, b, c) with mean 0, variance 1, skewness p1,
/// holding α + β = 4 and bisecting on the shape ratio r = β/α; then
/// (b, c) from αc + βb = 0 and c − b = (α+β)√(α+β+1)/√(αβ).
pub fn beta4_params_for_skewness(p1: f64) -> Result<(f64, f64, f64, f64)> {
    if !p1.is_finite() {
        return Err(KromError::DomainError(format!(
            "beta skewness match needs finite p1, got {p1}"
        )));
    }
    let s = 4.0_f64;
    // Skewness at fixed s: 2√(s+1)/(s+2) · (√r − 1/√r), strictly increasing.
    let coeff = 2.0 * (s + 1.0).sqrt() / (s + 2.0);
    let g = |r: f64| coeff * (r.sqrt() - 1.0 / r.sqrt());
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    let mut grow = 0;
    while g(lo) > p1 {
        lo /= 2.0;
        grow += 1;
        if grow > 2000 {
            return Err(KromError::RootSearchFailed(format!(
                "beta ratio bracket underflow at p1 = {p1}"
            )));
        }
    }
    while g(hi) < p1 {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 {
            return Err(KromError::RootSearchFailed(format!(
                "beta ratio bracket overflow at p1 = {p1}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < p1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let alpha = s / (1.0 + r);
    let beta = s * r / (1.0 + r);
    let spread = s * (s + 1.0).sqrt() / (alpha * beta).sqrt();
    let b = -alpha * spread / s;
    let c = beta * spread / s;
    Ok((alpha, beta, b, c))
}
