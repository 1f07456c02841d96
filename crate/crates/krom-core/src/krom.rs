//! End-to-end simulation: block planning, per-block scaled-L solves,
//! concatenation, random row permutation, and rotation into target
//! coordinates via X = 1μ′ + Q·M·A.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::KromError;
use crate::Result;
use crate::moments::{self, SampleMatrix, TargetMoments};
use crate::orthobasis::{build_omega, RotationBasis};
use crate::skewsolver::{solve_all_columns, SignChoice, SolverOptions};
use crate::stream::{derive_rng, derive_seed, STREAM_PERMUTATION};
use crate::valuegen::ValueSource;

// ---------------------------------------------------------------------------
// Configuration and result types.
// ---------------------------------------------------------------------------

/// Configuration for a full simulation run.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Total number of observations to generate.
    pub m: usize,
    /// Requested block count for concatenation; reduced automatically when
    /// the split would leave the last block under n + 2 rows.
    pub blocks: usize,
    /// Source of the arbitrary values filling each column tail.
    pub value_source: ValueSource,
    /// Redraw budget per column before giving up.
    pub max_attempts: u32,
    /// Sign policy for the free square root in columns beyond the first.
    pub sign_choice: SignChoice,
    /// Master seed; every value, sign, and permutation stream derives from it.
    pub seed: u64,
}

impl SolveConfig {
    /// Single-block configuration with the default attempt budget and a
    /// seed-derived random sign policy.
    pub fn new(m: usize, value_source: ValueSource, seed: u64) -> Self {
        Self {
            m,
            blocks: 1,
            value_source,
            max_attempts: 200,
            sign_choice: SignChoice::Random(0),
            seed,
        }
    }
}

/// One solved block: the m_k×n matrix M = S·Ω′ together with the number of
/// value draws each column consumed.
#[derive(Debug, Clone)]
pub struct GeneratedBlock {
    pub matrix: DMatrix<f64>,
    pub attempts: Vec<u32>,
}

/// Reproducibility record attached to every simulation sample.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub seed: u64,
    /// Block count actually used (may be below the requested count).
    pub effective_blocks: usize,
    pub block_lengths: Vec<usize>,
    /// `attempts[b][k]` = value draws spent on column k + 1 of block b.
    pub attempts: Vec<Vec<u32>>,
    pub wall_time: Duration,
}

/// A generated sample whose mean, covariance, and Kollo skewness match the
/// targets exactly, plus the provenance of the run that produced it.
#[derive(Debug, Clone)]
pub struct SimulationSample {
    pub x: SampleMatrix,
    pub provenance: Provenance,
}

// ---------------------------------------------------------------------------
// Block planning.
// ---------------------------------------------------------------------------

/// Split m observations into block lengths of at least n + 2 each.
///
/// The nominal length is l = max(n + 2, ⌊m / blocks⌋); every block but the
/// last uses l and the last takes the remainder m − (blocks − 1)·l. When the
/// remainder falls below n + 2 the block count is reduced until the split is
/// feasible (a single block always is, since m ≥ n + 2).
pub fn plan_blocks(m: usize, n: usize, blocks: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(KromError::Dimension("dimension n must be positive".into()));
    }
    if blocks == 0 {
        return Err(KromError::Dimension("block count must be positive".into()));
    }
    let min_len = n + 2;
    if m < min_len {
        return Err(KromError::Dimension(format!(
            "need m >= n + 2, got m = {m}, n = {n}"
        )));
    }
    let mut count = blocks;
    loop {
        let l = min_len.max(m / count);
        let last = m as i64 - (count as i64 - 1) * l as i64;
        if last >= min_len as i64 {
            let mut lengths = vec![l; count - 1];
            lengths.push(last as usize);
            return Ok(lengths);
        }
        count -= 1;
    }
}

// ---------------------------------------------------------------------------
// Block generation and concatenation.
// ---------------------------------------------------------------------------

/// Generate one block matrix M = S·Ω′ whose sample mean is zero, sample
/// covariance the identity, and Kollo skewness exactly `tau`.
pub fn getm(
    m_block: usize,
    tau: &DVector<f64>,
    value_source: &ValueSource,
    opts: &SolverOptions,
) -> Result<GeneratedBlock> {
    let omega = build_omega(tau.len())?;
    let p = moments::rotate_skewness(tau, &omega)?;
    let solved = solve_all_columns(&p, m_block, value_source, opts)?;
    Ok(GeneratedBlock {
        matrix: solved.s.matrix() * omega.transpose(),
        attempts: solved.attempts,
    })
}

/// Stack block matrices vertically and report the length-weighted average of
/// their Kollo skewness vectors, which is the Kollo skewness of the stack.
pub fn concatenate(blocks: &[DMatrix<f64>]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let first = blocks
        .first()
        .ok_or_else(|| KromError::Dimension("no blocks to concatenate".into()))?;
    let n = first.ncols();
    if let Some(block) = blocks.iter().find(|b| b.ncols() != n) {
        return Err(KromError::Dimension(format!(
            "block has {} columns, expected {n}",
            block.ncols()
        )));
    }
    let mut total_rows = 0usize;
    let mut weighted = DVector::zeros(n);
    for block in blocks {
        let tau_k = moments::kollo_skewness(&SampleMatrix::new(block.clone())?)?;
        weighted += tau_k * block.nrows() as f64;
        total_rows += block.nrows();
    }
    let mut stacked = DMatrix::zeros(total_rows, n);
    let mut row = 0;
    for block in blocks {
        stacked.rows_mut(row, block.nrows()).copy_from(block);
        row += block.nrows();
    }
    Ok((stacked, weighted / total_rows as f64))
}

// ---------------------------------------------------------------------------
// Permutation and the full pipeline.
// ---------------------------------------------------------------------------

/// Uniform random permutation of 0..m, used as a row reordering.
pub fn random_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    perm
}

/// Map a stacked block matrix into target coordinates: row `dst` of the
/// result is row `perm[dst]` of `stacked`·A, shifted by μ.
pub(crate) fn rotate_into_target(
    target: &TargetMoments,
    basis: &RotationBasis,
    stacked: &DMatrix<f64>,
    perm: &[usize],
) -> DMatrix<f64> {
    let n = target.n();
    let rotated = stacked * basis.a();
    let mut x = DMatrix::zeros(perm.len(), n);
    for (dst, &src) in perm.iter().enumerate() {
        for j in 0..n {
            x[(dst, j)] = rotated[(src, j)] + target.mu()[j];
        }
    }
    x
}

/// Run the full simulation: plan blocks, solve each block independently,
/// stack, permute rows once, and map into target coordinates.
///
/// The output satisfies, by construction: per-entry |mean − μ| at rounding
/// level, covariance equal to V, and Kollo skewness equal to τ.
pub fn krom_simulate(target: &TargetMoments, config: &SolveConfig) -> Result<SimulationSample> {
    let start = Instant::now();
    let n = target.n();
    let basis = RotationBasis::from_covariance(target.v())?;
    let lengths = plan_blocks(config.m, n, config.blocks)?;
    if lengths.len() < config.blocks {
        log::warn!(
            "reduced block count from {} to {} to keep every block at {} rows or more",
            config.blocks,
            lengths.len(),
            n + 2
        );
    }

    let solved: Result<Vec<GeneratedBlock>> = lengths
        .par_iter()
        .enumerate()
        .map(|(b, &len)| {
            let block_seed = derive_seed(config.seed, b as u64);
            let sign_choice = match config.sign_choice {
                SignChoice::Random(s) => SignChoice::Random(derive_seed(block_seed, s)),
                fixed => fixed,
            };
            let opts = SolverOptions {
                max_attempts: config.max_attempts,
                sign_choice,
                seed: block_seed,
            };
            getm(len, target.tau(), &config.value_source, &opts)
        })
        .collect();
    let solved = solved?;

    let attempts: Vec<Vec<u32>> = solved.iter().map(|b| b.attempts.clone()).collect();
    let mats: Vec<DMatrix<f64>> = solved.into_iter().map(|b| b.matrix).collect();
    let (stacked, _) = concatenate(&mats)?;

    let mut perm_rng = derive_rng(config.seed, STREAM_PERMUTATION);
    let perm = random_permutation(config.m, &mut perm_rng);
    let x = rotate_into_target(target, &basis, &stacked, &perm);

    let provenance = Provenance {
        seed: config.seed,
        effective_blocks: lengths.len(),
        block_lengths: lengths,
        attempts,
        wall_time: start.elapsed(),
    };
    Ok(SimulationSample {
        x: SampleMatrix::new(x)?,
        provenance,
    })
}
