//! CLI-level error type: engine errors plus parsing, I/O, and verification
//! failures, each with a stable machine-readable kind for the error JSON.

use krom_core::KromError;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Everything that can go wrong between argv and a written artifact.
#[derive(Debug, Error)]
pub enum CliError {
    /// A CSV cell failed to parse as a number.
    #[error("parse error at line {line}, column {column}: {detail}")]
    Parse {
        line: u64,
        column: usize,
        detail: String,
    },

    /// A CSV record has a different field count than the header.
    #[error("ragged rows: line {line} has {got} fields, expected {expected}")]
    RaggedRows {
        line: u64,
        got: usize,
        expected: usize,
    },

    /// A numeric cell parsed to NaN or ±∞.
    #[error("non-finite value at line {line}, column {column}")]
    NonFinite { line: u64, column: usize },

    /// Engine-level failure, passed through verbatim.
    #[error(transparent)]
    Engine(#[from] KromError),

    /// Filesystem failure with the path that caused it.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Invalid flag value or combination.
    #[error("{0}")]
    Config(String),

    /// The built-in post-run verification did not pass.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// Attach a path to a raw I/O error.
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable tag for the `error.kind` field of the error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "parse-error",
            Self::RaggedRows { .. } => "ragged-rows",
            Self::NonFinite { .. } => "non-finite",
            Self::Io { .. } => "io",
            Self::Config(_) => "config",
            Self::Verification(_) => "verification-failed",
            Self::Engine(e) => match e {
                KromError::Dimension(_) => "dimension",
                KromError::SingularCovariance(_) => "singular-covariance",
                KromError::NotPositiveDefinite => "not-positive-definite",
                KromError::SingularFactor => "singular-factor",
                KromError::NotAdmissible { .. } => "not-admissible",
                KromError::RankDeficientUnsupported { .. } => "rank-deficient-unsupported",
                KromError::AssumptionViolated { .. } => "assumption-violated",
                KromError::AdmissibilityExhausted { .. } => "admissibility-exhausted",
                KromError::SourceTooNarrow { .. } => "source-too-narrow",
                KromError::DegenerateValues => "degenerate-values",
                KromError::SkewnessOutOfRange { .. } => "skewness-out-of-range",
                KromError::RootSearchFailed(_) => "root-search-failed",
                KromError::DomainError(_) => "domain-error",
                KromError::WindowTooLarge { .. } => "window-too-large",
                KromError::ScaleTooLarge { .. } => "scale-too-large",
                KromError::TrialsExhausted { .. } => "trials-exhausted",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
