//! `krom` — exact-moment simulation from the command line.
//!
//! Generates multivariate samples whose mean, covariance, and Kollo skewness
//! match prescribed targets exactly, and runs the surrounding experiment
//! suite (failure rates, rolling skewness, bootstrap RMSE, timing). Every
//! artifact embeds the tool version, the resolved configuration, and the
//! seed; identical invocations with identical seeds produce byte-identical
//! artifacts, whatever the thread count.

mod commands;
mod config;
mod errors;
mod io;

use clap::{Parser, Subcommand};
use config::SCHEMA;
use errors::{CliError, Result};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "krom",
    version,
    about = "Exact-moment simulation: samples matching a target mean, covariance, and Kollo skewness"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Master seed for all randomness (fallback: KROM_SEED env var, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on internal worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse a numeric CSV and write its mean/covariance/Kollo targets as JSON.
    Ingest {
        /// Input CSV (header row mandatory; decimal or scientific numbers).
        csv: PathBuf,
        /// 0-based index of a timestamp column to drop (auto-detected when
        /// the first cell of column 0 is not numeric).
        #[arg(long)]
        time_col: Option<usize>,
        /// Output moments JSON.
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate a sample matching the targets exactly and verify it.
    Simulate {
        /// Targets: a moments JSON (from `ingest`) or a CSV to ingest on the fly.
        #[arg(long)]
        targets: PathBuf,
        /// Number of observations to generate.
        #[arg(short, long)]
        m: usize,
        /// Block count for concatenation.
        #[arg(short = 'N', long, default_value_t = 1)]
        blocks: usize,
        /// Arbitrary-value source: zero | normal | sn:<p1> | nig:<p1> |
        /// beta:<p1> | t:<nu> | bootstrap:<csv>.
        #[arg(long, default_value = "normal")]
        source: String,
        /// Variance σ² of the adjusted arbitrary values.
        #[arg(long, default_value_t = 0.7)]
        sigma2: f64,
        /// Redraw budget per column before giving up.
        #[arg(long, default_value_t = 200)]
        max_attempts: u32,
        /// Timestamp column to drop when `--targets` is a CSV.
        #[arg(long)]
        time_col: Option<usize>,
        /// Output sample CSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Estimate value-draw failure rates over an (n, m, σ²) grid at τ = 0.
    FailureRate {
        /// Dimensions n (comma-separated).
        #[arg(short, long, value_delimiter = ',', default_values_t = [5usize, 20])]
        n: Vec<usize>,
        /// Sample sizes m (comma-separated).
        #[arg(short, long, value_delimiter = ',', default_values_t = [50usize, 100, 500, 1000])]
        m: Vec<usize>,
        /// Value variances σ² (comma-separated).
        #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.7, 0.8, 0.9])]
        sigma2: Vec<f64>,
        /// Value draws per grid cell.
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        /// Parametric family of the draws (zero/bootstrap are not valid here).
        #[arg(long, default_value = "normal")]
        source: String,
        /// Output CSV, one row per grid cell.
        #[arg(long)]
        out: PathBuf,
    },

    /// Kollo skewness over a rolling window of an observed CSV.
    Rolling {
        /// Input CSV of observations.
        #[arg(long)]
        data: PathBuf,
        /// Window length in rows (at least n + 2).
        #[arg(long)]
        window: usize,
        /// Timestamp column to drop.
        #[arg(long)]
        time_col: Option<usize>,
        /// Output CSV, one row per window end.
        #[arg(long)]
        out: PathBuf,
    },

    /// Bootstrap RMSE of the three moment estimates at each sample size.
    Rmse {
        /// Input CSV of observations (the bootstrap source).
        #[arg(long)]
        data: PathBuf,
        /// Resample sizes m (comma-separated).
        #[arg(short, long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Bootstrap replications per sample size.
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Timestamp column to drop.
        #[arg(long)]
        time_col: Option<usize>,
        /// Output CSV, one row per sample size.
        #[arg(long)]
        out: PathBuf,
    },

    /// Time the closed-form engine against the trial-and-error baseline.
    Bench {
        /// Dimension of the targets.
        #[arg(short, long, default_value_t = 5)]
        n: usize,
        /// Observations per sample.
        #[arg(short, long, default_value_t = 25)]
        m: usize,
        /// Number of random skewness targets.
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Output JSON (contains measured wall times).
        #[arg(long)]
        out: PathBuf,
    },

    /// Solve family parameters for mean 0, variance 1, and skewness p1.
    Attainable {
        /// Family: sn, nig, or beta.
        family: String,
        /// Target standardized skewness.
        #[arg(allow_negative_numbers = true)]
        p1: f64,
        /// Output JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Seed precedence: --seed flag, then KROM_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("KROM_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("KROM_SEED must be an unsigned integer, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::Config(format!("KROM_SEED is unreadable: {e}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = resolve_seed(cli.seed)?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool setup failed: {e}")))?;
    }

    match &cli.command {
        Cmd::Ingest { csv, time_col, out } => commands::cmd_ingest(csv, *time_col, out, seed),
        Cmd::Simulate {
            targets,
            m,
            blocks,
            source,
            sigma2,
            max_attempts,
            time_col,
            out,
        } => commands::cmd_simulate(
            targets,
            *m,
            *blocks,
            source,
            *sigma2,
            *max_attempts,
            *time_col,
            out,
            seed,
        ),
        Cmd::FailureRate {
            n,
            m,
            sigma2,
            trials,
            source,
            out,
        } => commands::cmd_failure_rate(n, m, sigma2, *trials, source, out, seed),
        Cmd::Rolling {
            data,
            window,
            time_col,
            out,
        } => commands::cmd_rolling(data, *window, *time_col, out, seed),
        Cmd::Rmse {
            data,
            m,
            reps,
            time_col,
            out,
        } => commands::cmd_rmse(data, m, *reps, *time_col, out, seed),
        Cmd::Bench { n, m, count, out } => commands::cmd_bench(*n, *m, *count, out, seed),
        Cmd::Attainable { family, p1, out } => {
            commands::cmd_attainable(family, *p1, out.as_deref(), seed)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let payload = serde_json::json!({
            "schema": SCHEMA,
            "error": { "kind": err.kind(), "message": err.to_string() }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
