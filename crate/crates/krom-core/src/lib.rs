//! Exact-moment multivariate simulation engine.
//!
//! Generates m×n samples whose sample mean, sample covariance, and Kollo
//! skewness vector match prescribed targets exactly (not just in
//! expectation), by solving the per-column skewness equations of a rotated
//! scaled-L matrix in closed form. Solvability is decided *before* solving,
//! via necessary-and-sufficient admissibility conditions, so the engine never
//! falls back to trial-and-error optimization.
//!
//! Module map:
//! - [`moments`] — sample moments: mean/covariance, co-skewness tensor,
//!   Mardia and Kollo skewness, and the rotated Kollo skewness.
//! - [`orthobasis`] — the Helmert-style rotation Ω, covariance factors,
//!   scaled-L validation and recovery.
//! - [`skewsolver`] — per-column admissibility checks and closed-form solves.
//! - [`valuegen`] — arbitrary-value sources (zero / bootstrap / parametric),
//!   the variance adjustment, and skewness-matched distribution parameters.
//! - [`krom`] — the end-to-end simulation orchestrator with block
//!   concatenation and row permutation.
//! - [`analysis`] — failure-rate grids, the theoretical first-column failure
//!   rate, rolling-window Kollo skewness, bootstrap RMSE, and timing benches.
//! - [`oracle`] — independent brute-force verifiers and the trial-and-error
//!   baseline used for timing comparisons.
//! - [`stream`] — deterministic seed-indexed RNG sub-streams; every random
//!   choice in the crate derives from a master seed through these.

pub mod analysis;
pub mod error;
pub mod krom;
pub mod moments;
pub mod oracle;
pub mod orthobasis;
pub mod skewsolver;
pub mod stream;
pub mod valuegen;

mod linalg;

pub use error::KromError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, KromError>;
