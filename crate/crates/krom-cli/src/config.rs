//! Resolved run configuration and the provenance envelope shared by every
//! artifact: tool identity, argv, seed, config, and optional verification.

use serde::{Deserialize, Serialize};

/// Versioned schema tag present in every JSON artifact.
pub const SCHEMA: &str = "krom/1";

/// Fully resolved parameters of one command invocation. Embedded in every
/// artifact so a run can be reproduced from its outputs alone; round-trips
/// losslessly through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Ingest {
        input: String,
        time_col: Option<usize>,
        out: String,
    },
    Simulate {
        targets: String,
        m: usize,
        blocks: usize,
        source: String,
        sigma2: f64,
        max_attempts: u32,
        time_col: Option<usize>,
        out: String,
    },
    FailureRate {
        n: Vec<usize>,
        m: Vec<usize>,
        sigma2: Vec<f64>,
        trials: u32,
        source: String,
        out: String,
    },
    Rolling {
        data: String,
        window: usize,
        time_col: Option<usize>,
        out: String,
    },
    Rmse {
        data: String,
        m: Vec<usize>,
        replications: usize,
        time_col: Option<usize>,
        out: String,
    },
    Bench {
        n: usize,
        m: usize,
        count: usize,
        out: String,
    },
    Attainable {
        family: String,
        p1: f64,
        out: Option<String>,
    },
}

/// Name and version of the binary that produced an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "krom",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Recomputed moment errors of a written sample against its targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    /// max |mean̂ᵢ − μᵢ|.
    pub mean_abs_error: f64,
    /// max |V̂ᵢⱼ − Vᵢⱼ| / max |Vᵢⱼ|.
    pub cov_rel_error: f64,
    /// max |τ̂ᵢ − τᵢ|.
    pub kollo_abs_error: f64,
    pub tolerances: VerificationTolerances,
    pub passed: bool,
}

/// Acceptance thresholds applied by the built-in verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationTolerances {
    pub mean: f64,
    pub cov_rel: f64,
    pub kollo: f64,
}

impl VerificationTolerances {
    pub fn standard() -> Self {
        Self {
            mean: 1e-10,
            cov_rel: 1e-8,
            kollo: 1e-6,
        }
    }
}

/// Deterministic trace of one solved simulation: which blocks were used and
/// how many value draws each column consumed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    pub effective_blocks: usize,
    pub block_lengths: Vec<usize>,
    /// `attempts[b][k]` = draws spent on column k + 1 of block b.
    pub attempts: Vec<Vec<u32>>,
}

/// Sidecar run manifest written next to every artifact
/// (`<artifact>.manifest.json`). Re-running `command` with the same inputs
/// reproduces the artifact byte-identically; wall-clock measurements are
/// deliberately excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub tool: ToolInfo,
    /// argv as invoked, without the binary name.
    pub command: Vec<String>,
    pub seed: u64,
    pub config: RunConfig,
    /// Paths of the artifacts this run wrote, as given on the command line.
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_trace: Option<SolveTrace>,
}

impl Manifest {
    pub fn new(seed: u64, config: RunConfig, outputs: Vec<String>) -> Self {
        Self {
            schema: SCHEMA,
            tool: ToolInfo::current(),
            command: std::env::args().skip(1).collect(),
            seed,
            config,
            outputs,
            verification: None,
            solve_trace: None,
        }
    }
}
