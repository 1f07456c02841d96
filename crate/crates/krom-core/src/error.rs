//! Error taxonomy shared by every module in the crate.

use crate::skewsolver::FailedCondition;
use thiserror::Error;

/// All failure modes of the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KromError {
    /// Shapes or sizes of the inputs disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Covariance matrix is singular at the working tolerance.
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    /// Matrix expected to be symmetric positive definite is not.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// Covariance factor cannot be inverted.
    #[error("covariance factor is singular")]
    SingularFactor,

    /// The admissibility condition for a column solve does not hold.
    #[error("system not admissible ({condition:?}, margin {margin:.3e})")]
    NotAdmissible {
        condition: FailedCondition,
        margin: f64,
    },

    /// Coefficient matrix is rank deficient, leaving a multi-column residual
    /// block the scalar completed-square path cannot handle.
    #[error("rank-deficient system unsupported (rank {rank}, {free_cols} free columns)")]
    RankDeficientUnsupported { rank: usize, free_cols: usize },

    /// Standing assumption of the zero-value shortcut fails (t ≤ 0).
    #[error("zero-value shortcut assumption violated: t = {t:.6e} <= 0")]
    AssumptionViolated { t: f64 },

    /// No admissible arbitrary values found for a column within the budget.
    #[error("no admissible values for column {column} after {attempts} attempts")]
    AdmissibilityExhausted { column: usize, attempts: u32 },

    /// Bootstrap source has fewer columns than the requested column index.
    #[error("bootstrap source has {available} columns, column {requested} requested")]
    SourceTooNarrow { requested: usize, available: usize },

    /// Drawn values have zero spread and cannot be standardized.
    #[error("degenerate values: zero spread, cannot standardize")]
    DegenerateValues,

    /// Requested skewness is outside the family's attainable range.
    #[error("skewness {p1} out of range ({lo}, {hi})")]
    SkewnessOutOfRange { p1: f64, lo: f64, hi: f64 },

    /// Bracket expansion or iteration budget of a root search exhausted.
    #[error("root search failed: {0}")]
    RootSearchFailed(String),

    /// Scalar input outside the operation's domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Rolling window does not fit the data.
    #[error("window {window} invalid for {rows}x{cols} data (need {min} <= window <= rows)")]
    WindowTooLarge {
        window: usize,
        rows: usize,
        cols: usize,
        min: usize,
    },

    /// Brute-force oracle invoked beyond its desk-scale limits.
    #[error("oracle limited to k <= {max_k}, m <= {max_m} (got k = {k}, m = {m})")]
    ScaleTooLarge {
        k: usize,
        m: usize,
        max_k: usize,
        max_m: usize,
    },

    /// Trial-and-error baseline ran out of trials.
    #[error("baseline exhausted {trials} trials at column {column}")]
    TrialsExhausted { column: usize, trials: u32 },
}
