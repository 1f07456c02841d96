//! The seven command implementations: thin, deterministic wrappers over the
//! engine that parse inputs, run one computation, and write artifact +
//! manifest pairs.

use crate::config::{
    Manifest, RunConfig, SolveTrace, ToolInfo, Verification, VerificationTolerances, SCHEMA,
};
use crate::errors::{CliError, Result};
use crate::io::{
    self, csv_flush, csv_writer, format_float, manifest_path, read_moments_json, read_numeric_csv,
    write_csv_row, write_json, write_matrix_csv,
};
use krom_core::analysis::{
    bench_timing, bootstrap_rmse_study, empirical_failure_rate, rolling_kollo,
    theoretical_failure_rate_col1, RmseReport, TimingReport,
};
use krom_core::krom::{krom_simulate, SolveConfig};
use krom_core::moments::{kollo_skewness, sample_mean_cov, TargetMoments};
use krom_core::orthobasis::{recover_scaled_l, RotationBasis, ScaledLMatrix};
use krom_core::stream::{derive_rng, derive_seed};
use krom_core::valuegen::{
    beta4_params_for_skewness, nig_params_for_skewness, sn_params_for_skewness,
    DistributionFamily, ValueSource,
};
use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;
use std::path::Path;

// ---------------------------------------------------------------------------
// Value-source parsing.
// ---------------------------------------------------------------------------

/// Parse a `--source` spec into the family it names, without σ attached.
/// Accepted: `zero`, `normal`, `sn:<p1>`, `nig:<p1>`, `beta:<p1>`, `t:<nu>`,
/// `bootstrap:<csv>`.
enum SourceSpec {
    Zero,
    Family(DistributionFamily),
    Bootstrap(String),
}

fn parse_source_spec(spec: &str) -> Result<SourceSpec> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let number = |what: &str| -> Result<f64> {
        arg.ok_or_else(|| CliError::Config(format!("source {name:?} needs {what}, e.g. {name}:0.5")))?
            .parse()
            .map_err(|_| CliError::Config(format!("source {spec:?}: {what} is not a number")))
    };
    match name {
        "zero" => Ok(SourceSpec::Zero),
        "normal" => Ok(SourceSpec::Family(DistributionFamily::Normal {
            mu: 0.0,
            sigma: 1.0,
        })),
        "sn" => {
            let (xi, omega, alpha) = sn_params_for_skewness(number("a skewness")?)?;
            Ok(SourceSpec::Family(DistributionFamily::SkewNormal {
                xi,
                omega,
                alpha,
            }))
        }
        "nig" => {
            let (alpha, beta, delta, mu) = nig_params_for_skewness(number("a skewness")?)?;
            Ok(SourceSpec::Family(DistributionFamily::Nig {
                alpha,
                beta,
                delta,
                mu,
            }))
        }
        "beta" => {
            let (alpha, beta, b, c) = beta4_params_for_skewness(number("a skewness")?)?;
            Ok(SourceSpec::Family(DistributionFamily::Beta4 { alpha, beta, b, c }))
        }
        "t" => Ok(SourceSpec::Family(DistributionFamily::StudentT {
            mu: 0.0,
            sigma: 1.0,
            nu: number("degrees of freedom")?,
        })),
        "bootstrap" => {
            let path = arg.ok_or_else(|| {
                CliError::Config("source \"bootstrap\" needs a CSV path, e.g. bootstrap:returns.csv".into())
            })?;
            Ok(SourceSpec::Bootstrap(path.to_string()))
        }
        other => Err(CliError::Config(format!(
            "unknown source {other:?}; expected zero, normal, sn:<p1>, nig:<p1>, beta:<p1>, t:<nu>, or bootstrap:<csv>"
        ))),
    }
}

/// Build the engine's value source from a `--source` spec and σ².
fn build_value_source(spec: &str, sigma2: f64) -> Result<ValueSource> {
    let sigma = sigma2.sqrt();
    match parse_source_spec(spec)? {
        SourceSpec::Zero => Ok(ValueSource::zero()),
        SourceSpec::Family(family) => Ok(ValueSource::parametric(family, sigma)?),
        SourceSpec::Bootstrap(path) => {
            let data = read_numeric_csv(Path::new(&path), None)?;
            let (mu, v) = sample_mean_cov(&data.sample)?;
            let basis = RotationBasis::from_covariance(&v)?;
            let recovered = recover_scaled_l(data.sample.matrix(), &mu, &basis)?;
            let scaled_l = ScaledLMatrix::new(recovered, 1e-8)?;
            Ok(ValueSource::bootstrap(scaled_l, sigma)?)
        }
    }
}

/// A `--source` spec restricted to parametric families (failure-rate grids).
fn parse_family(spec: &str) -> Result<DistributionFamily> {
    match parse_source_spec(spec)? {
        SourceSpec::Family(family) => Ok(family),
        _ => Err(CliError::Config(format!(
            "source {spec:?} is not usable here; failure-rate draws need a parametric family"
        ))),
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn cmd_ingest(input: &Path, time_col: Option<usize>, out: &Path, seed: u64) -> Result<()> {
    let data = read_numeric_csv(input, time_col)?;
    let target = TargetMoments::from_sample(&data.sample)?;
    let config = RunConfig::Ingest {
        input: input.display().to_string(),
        time_col: data.dropped_time_col,
        out: out.display().to_string(),
    };
    let artifact = io::MomentsArtifact::new(
        seed,
        config.clone(),
        &data.names,
        data.sample.rows(),
        &target,
    );
    write_json(out, &artifact)?;
    let manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    write_json(&manifest_path(out), &manifest)?;
    log::info!(
        "ingested {} rows x {} variables from {}",
        data.sample.rows(),
        data.sample.cols(),
        input.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    targets_path: &Path,
    m: usize,
    blocks: usize,
    source: &str,
    sigma2: f64,
    max_attempts: u32,
    time_col: Option<usize>,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let is_json = targets_path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let (target, names) = if is_json {
        read_moments_json(targets_path)?
    } else {
        let data = read_numeric_csv(targets_path, time_col)?;
        (TargetMoments::from_sample(&data.sample)?, data.names)
    };

    let mut solve = SolveConfig::new(m, build_value_source(source, sigma2)?, seed);
    solve.blocks = blocks;
    solve.max_attempts = max_attempts;
    let sample = krom_simulate(&target, &solve)?;

    write_matrix_csv(out, &names, sample.x.matrix())?;

    let (mu_hat, v_hat) = sample_mean_cov(&sample.x)?;
    let tau_hat = kollo_skewness(&sample.x)?;
    let tolerances = VerificationTolerances::standard();
    let mean_abs_error = (mu_hat - target.mu()).amax();
    let cov_rel_error = (v_hat - target.v()).amax() / target.v().amax();
    let kollo_abs_error = (tau_hat - target.tau()).amax();
    let passed = mean_abs_error <= tolerances.mean
        && cov_rel_error <= tolerances.cov_rel
        && kollo_abs_error <= tolerances.kollo;
    let verification = Verification {
        mean_abs_error,
        cov_rel_error,
        kollo_abs_error,
        tolerances,
        passed,
    };

    let config = RunConfig::Simulate {
        targets: targets_path.display().to_string(),
        m,
        blocks,
        source: source.to_string(),
        sigma2,
        max_attempts,
        time_col,
        out: out.display().to_string(),
    };
    let mut manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    manifest.verification = Some(verification.clone());
    manifest.solve_trace = Some(SolveTrace {
        effective_blocks: sample.provenance.effective_blocks,
        block_lengths: sample.provenance.block_lengths.clone(),
        attempts: sample.provenance.attempts.clone(),
    });
    write_json(&manifest_path(out), &manifest)?;

    if !verification.passed {
        return Err(CliError::Verification(format!(
            "moment errors exceed tolerances: mean {mean_abs_error:.3e}, \
             covariance {cov_rel_error:.3e} (relative), kollo {kollo_abs_error:.3e}"
        )));
    }
    log::info!(
        "wrote {} observations to {} in {:.3}s",
        m,
        out.display(),
        sample.provenance.wall_time.as_secs_f64()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// failure-rate
// ---------------------------------------------------------------------------

pub fn cmd_failure_rate(
    n_list: &[usize],
    m_list: &[usize],
    sigma2_list: &[f64],
    trials: u32,
    source: &str,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let family = parse_family(source)?;
    let is_normal = matches!(family, DistributionFamily::Normal { .. });

    let mut writer = csv_writer(out)?;
    let header: Vec<String> = [
        "n",
        "m",
        "sigma2",
        "trials",
        "alpha1",
        "alpha",
        "alpha1_theory",
        "verified",
        "verify_mismatches",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_csv_row(&mut writer, out, &header)?;

    let mut index = 0u64;
    for &n in n_list {
        for &m in m_list {
            for &sigma2 in sigma2_list {
                let tau = DVector::zeros(n);
                let cell = empirical_failure_rate(
                    n,
                    m,
                    sigma2,
                    &tau,
                    trials,
                    family,
                    derive_seed(seed, index),
                )?;
                // The closed-form rate covers normal draws at p₁ = 0 only.
                let theory = if is_normal {
                    theoretical_failure_rate_col1(sigma2.sqrt(), m, 0.0)
                        .ok()
                        .map(|h| format_float(100.0 * h))
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                let row = vec![
                    cell.n.to_string(),
                    cell.m.to_string(),
                    format_float(cell.sigma2),
                    cell.trials.to_string(),
                    format_float(cell.alpha1),
                    format_float(cell.alpha),
                    theory,
                    cell.verified.to_string(),
                    cell.verify_mismatches.to_string(),
                ];
                write_csv_row(&mut writer, out, &row)?;
                index += 1;
            }
        }
    }
    csv_flush(&mut writer, out)?;

    let config = RunConfig::FailureRate {
        n: n_list.to_vec(),
        m: m_list.to_vec(),
        sigma2: sigma2_list.to_vec(),
        trials,
        source: source.to_string(),
        out: out.display().to_string(),
    };
    let manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    write_json(&manifest_path(out), &manifest)
}

// ---------------------------------------------------------------------------
// rolling
// ---------------------------------------------------------------------------

pub fn cmd_rolling(
    data_path: &Path,
    window: usize,
    time_col: Option<usize>,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let data = read_numeric_csv(data_path, time_col)?;
    let points = rolling_kollo(&data.sample, window)?;
    let n = data.sample.cols();

    let mut writer = csv_writer(out)?;
    let mut header = vec!["end".to_string()];
    header.extend(data.names.iter().map(|name| format!("tau_{name}")));
    header.extend((1..=n).map(|j| format!("p_{j}")));
    write_csv_row(&mut writer, out, &header)?;
    for point in &points {
        let mut row = vec![point.end.to_string()];
        match (&point.tau, &point.p) {
            (Some(tau), Some(p)) => {
                row.extend(tau.iter().map(|&x| format_float(x)));
                row.extend(p.iter().map(|&x| format_float(x)));
            }
            // Singular window: leave the 2n value cells empty.
            _ => row.extend(std::iter::repeat_n(String::new(), 2 * n)),
        }
        write_csv_row(&mut writer, out, &row)?;
    }
    csv_flush(&mut writer, out)?;

    let config = RunConfig::Rolling {
        data: data_path.display().to_string(),
        window,
        time_col: data.dropped_time_col,
        out: out.display().to_string(),
    };
    let manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    write_json(&manifest_path(out), &manifest)
}

// ---------------------------------------------------------------------------
// rmse
// ---------------------------------------------------------------------------

pub fn cmd_rmse(
    data_path: &Path,
    m_list: &[usize],
    replications: usize,
    time_col: Option<usize>,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let data = read_numeric_csv(data_path, time_col)?;

    let mut writer = csv_writer(out)?;
    let header: Vec<String> = [
        "m",
        "replications",
        "mean_rmse_mean",
        "mean_rmse_se",
        "mean_rmse_ratio",
        "cov_rmse_mean",
        "cov_rmse_se",
        "cov_rmse_ratio",
        "kollo_rmse_mean",
        "kollo_rmse_se",
        "kollo_rmse_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_csv_row(&mut writer, out, &header)?;

    for (index, &m) in m_list.iter().enumerate() {
        let report: RmseReport =
            bootstrap_rmse_study(&data.sample, m, replications, derive_seed(seed, index as u64))?;
        let row = vec![
            report.m.to_string(),
            report.replications.to_string(),
            format_float(report.rmse_mean.mean),
            format_float(report.rmse_mean.standard_error),
            format_float(report.rmse_mean.ratio),
            format_float(report.rmse_cov.mean),
            format_float(report.rmse_cov.standard_error),
            format_float(report.rmse_cov.ratio),
            format_float(report.rmse_kollo.mean),
            format_float(report.rmse_kollo.standard_error),
            format_float(report.rmse_kollo.ratio),
        ];
        write_csv_row(&mut writer, out, &row)?;
    }
    csv_flush(&mut writer, out)?;

    let config = RunConfig::Rmse {
        data: data_path.display().to_string(),
        m: m_list.to_vec(),
        replications,
        time_col: data.dropped_time_col,
        out: out.display().to_string(),
    };
    let manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    write_json(&manifest_path(out), &manifest)
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

/// Timing artifact. The report carries measured wall times, so this is the
/// one artifact that is *not* byte-identical across reruns.
#[derive(Serialize)]
struct BenchArtifact {
    schema: &'static str,
    tool: ToolInfo,
    seed: u64,
    config: RunConfig,
    report: TimingReport,
}

pub fn cmd_bench(n: usize, m: usize, count: usize, out: &Path, seed: u64) -> Result<()> {
    if count == 0 {
        return Err(CliError::Config("--count must be at least 1".into()));
    }
    let mut rng = derive_rng(seed, 0);
    let targets: Vec<DVector<f64>> = (0..count)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    let report = bench_timing(n, m, &targets, derive_seed(seed, 1))?;
    log::info!(
        "closed form {:.3e}s vs baseline {:.3e}s per target (ratio {:.2})",
        report.krom_mean,
        report.baseline_mean,
        report.ratio
    );

    let config = RunConfig::Bench {
        n,
        m,
        count,
        out: out.display().to_string(),
    };
    let artifact = BenchArtifact {
        schema: SCHEMA,
        tool: ToolInfo::current(),
        seed,
        config: config.clone(),
        report,
    };
    write_json(out, &artifact)?;
    let manifest = Manifest::new(seed, config, vec![out.display().to_string()]);
    write_json(&manifest_path(out), &manifest)
}

// ---------------------------------------------------------------------------
// attainable
// ---------------------------------------------------------------------------

/// Parameters that give a family mean 0, variance 1, and skewness p₁.
#[derive(Serialize)]
struct AttainableArtifact {
    schema: &'static str,
    tool: ToolInfo,
    seed: u64,
    config: RunConfig,
    family: String,
    p1: f64,
    params: serde_json::Value,
}

pub fn cmd_attainable(family: &str, p1: f64, out: Option<&Path>, seed: u64) -> Result<()> {
    let params = match family {
        "sn" => {
            let (xi, omega, alpha) = sn_params_for_skewness(p1)?;
            serde_json::json!({ "xi": xi, "omega": omega, "alpha": alpha })
        }
        "nig" => {
            let (alpha, beta, delta, mu) = nig_params_for_skewness(p1)?;
            serde_json::json!({ "alpha": alpha, "beta": beta, "delta": delta, "mu": mu })
        }
        "beta" => {
            let (alpha, beta, b, c) = beta4_params_for_skewness(p1)?;
            serde_json::json!({ "alpha": alpha, "beta": beta, "b": b, "c": c })
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown family {other:?}; expected sn, nig, or beta"
            )))
        }
    };
    let config = RunConfig::Attainable {
        family: family.to_string(),
        p1,
        out: out.map(|p| p.display().to_string()),
    };
    let artifact = AttainableArtifact {
        schema: SCHEMA,
        tool: ToolInfo::current(),
        seed,
        config: config.clone(),
        family: family.to_string(),
        p1,
        params,
    };
    match out {
        Some(path) => {
            write_json(path, &artifact)?;
            let manifest = Manifest::new(seed, config, vec![path.display().to_string()]);
            write_json(&manifest_path(path), &manifest)
        }
        None => {
            let text = serde_json::to_string_pretty(&artifact)
                .map_err(|e| CliError::Config(format!("JSON serialization: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}
