//! Alternating low-rank + sparse + residual decomposition.
//!
//! Each iteration projects the sparse-corrected matrix onto the rank-`r`
//! set, then projects the low-rank-corrected matrix onto the cardinality-`k`
//! set, until the relative squared residual falls under the tolerance. The
//! naive engine uses exact truncated SVDs; the fast engine replaces them
//! with the bilateral-projection approximation.

use crate::brp::{brp_approx, brp_power, BrpConfig, BrpError};
use crate::matrix::{DenseMatrix, MatError};
use crate::rng::RngSeed;
use crate::svd::{effective_rank, svd_full, svd_truncate};
use crate::threshold::hard_threshold_entries;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GodecError {
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },
    #[error("working rank collapsed to zero after {iterations} iterations; the sparse-corrected matrix lost all signal")]
    RankCollapsed { iterations: usize },
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Brp(#[from] BrpError),
}

/// Which low-rank projector drives the alternation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GodecEngine {
    /// Exact truncated SVD each iteration.
    Naive,
    /// Bilateral random projection (optionally with the power scheme).
    Brp,
}

#[derive(Debug, Clone)]
pub struct GodecConfig {
    /// Rank budget for the low-rank part.
    pub rank: usize,
    /// Cardinality budget for the sparse part.
    pub cardinality: usize,
    /// Stop once `|X - L - S|_F^2 / |X|_F^2` falls to this value.
    pub tolerance: f64,
    /// Power-scheme exponent for the fast engine; 0 selects the closed form.
    pub power: usize,
    /// Cap on total update iterations, counting any restarts.
    pub max_iters: usize,
    pub seed: RngSeed,
    pub engine: GodecEngine,
}

impl GodecConfig {
    pub fn new(rank: usize, cardinality: usize, seed: RngSeed) -> Self {
        Self {
            rank,
            cardinality,
            tolerance: 1e-7,
            power: 2,
            max_iters: 100,
            seed,
            engine: GodecEngine::Brp,
        }
    }
}

/// Outcome of a decomposition run.
#[derive(Debug, Clone)]
pub struct DecompResult {
    pub low_rank: DenseMatrix,
    pub sparse: DenseMatrix,
    /// `|X - L_t - S_t|_F^2` after each completed iteration. Cleared when a
    /// rank shrink restarts the run, so it describes the final descent.
    pub objective_trace: Vec<f64>,
    /// Total update iterations performed, including any before restarts.
    pub iterations: usize,
    pub converged: bool,
    /// Numerical rank of the returned low-rank part (singular values above
    /// `1e-10` times the largest), never exceeding the working rank.
    pub effective_rank: usize,
}

fn validate(x: &DenseMatrix, cfg: &GodecConfig) -> Result<(), GodecError> {
    if cfg.rank == 0 || cfg.rank > x.rows().min(x.cols()) {
        return Err(GodecError::InvalidParameter {
            name: "rank",
            why: format!(
                "must be in 1..={} for a {} x {} input, got {}",
                x.rows().min(x.cols()),
                x.rows(),
                x.cols(),
                cfg.rank
            ),
        });
    }
    if cfg.cardinality > x.rows() * x.cols() {
        return Err(GodecError::InvalidParameter {
            name: "cardinality",
            why: format!(
                "exceeds the {} entries of the input, got {}",
                x.rows() * x.cols(),
                cfg.cardinality
            ),
        });
    }
    if !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(GodecError::InvalidParameter {
            name: "tolerance",
            why: format!("must be positive and finite, got {}", cfg.tolerance),
        });
    }
    if cfg.max_iters == 0 {
        return Err(GodecError::InvalidParameter {
            name: "max_iters",
            why: "must be at least 1".to_string(),
        });
    }
    Ok(())
}

fn trivial_zero_result(x: &DenseMatrix) -> Result<DecompResult, GodecError> {
    Ok(DecompResult {
        low_rank: DenseMatrix::zeros(x.rows(), x.cols())?,
        sparse: DenseMatrix::zeros(x.rows(), x.cols())?,
        objective_trace: vec![0.0],
        iterations: 1,
        converged: true,
        effective_rank: 0,
    })
}

/// Dispatches to the engine selected in the config.
pub fn godec(x: &DenseMatrix, cfg: &GodecConfig) -> Result<DecompResult, GodecError> {
    match cfg.engine {
        GodecEngine::Naive => godec_naive(x, cfg),
        GodecEngine::Brp => godec_brp(x, cfg),
    }
}

/// Alternation with exact truncated SVDs. Always performs at least one
/// iteration; the stopping rule is evaluated after each update pair.
/// Non-convergence within `max_iters` is reported, not raised.
pub fn godec_naive(x: &DenseMatrix, cfg: &GodecConfig) -> Result<DecompResult, GodecError> {
    validate(x, cfg)?;
    if cfg.engine != GodecEngine::Naive {
        return Err(GodecError::InvalidParameter {
            name: "engine",
            why: "this entry point requires the naive engine".to_string(),
        });
    }
    let norm_x_sq = x.frobenius_norm_sq();
    if norm_x_sq == 0.0 {
        return trivial_zero_result(x);
    }

    let mut s = DenseMatrix::zeros(x.rows(), x.cols())?;
    let mut l = DenseMatrix::zeros(x.rows(), x.cols())?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        l = svd_truncate(&x.sub(&s)?, cfg.rank)?;
        let xl = x.sub(&l)?;
        s = hard_threshold_entries(&xl, cfg.cardinality);
        let objective = xl.sub(&s)?.frobenius_norm_sq();
        trace.push(objective);
        if objective / norm_x_sq <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    let eff = effective_rank(&svd_full(&l)?.sigma, 1e-10);
    Ok(DecompResult {
        low_rank: l,
        sparse: s,
        objective_trace: trace,
        iterations,
        converged,
        effective_rank: eff,
    })
}

/// Alternation with the bilateral-projection low-rank step. A fresh sketch
/// is drawn every iteration from the seed substream. When a sketch core
/// turns out rank-deficient the run restarts from scratch at the detected
/// rank (sparse part reset, trace cleared); iterations spent before the
/// restart still count against `max_iters`. A collapse to rank zero on a
/// nonzero input is an error.
pub fn godec_brp(x: &DenseMatrix, cfg: &GodecConfig) -> Result<DecompResult, GodecError> {
    validate(x, cfg)?;
    if cfg.engine != GodecEngine::Brp {
        return Err(GodecError::InvalidParameter {
            name: "engine",
            why: "this entry point requires the brp engine".to_string(),
        });
    }
    let norm_x_sq = x.frobenius_norm_sq();
    if norm_x_sq == 0.0 {
        return trivial_zero_result(x);
    }

    let mut rank = cfg.rank;
    let mut s = DenseMatrix::zeros(x.rows(), x.cols())?;
    let mut current: Option<(DenseMatrix, usize)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    'run: loop {
        trace.clear();
        loop {
            if iterations >= cfg.max_iters {
                break 'run;
            }
            iterations += 1;
            let resid = x.sub(&s)?;
            let bcfg = BrpConfig {
                rank,
                power: cfg.power,
                oversample: 0,
                refine: true,
                seed: cfg.seed.derive("iter").derive(&iterations.to_string()),
            };
            let res = if cfg.power == 0 {
                brp_approx(&resid, &bcfg)?
            } else {
                brp_power(&resid, &bcfg)?
            };
            if res.rank_shrunk {
                if res.effective_rank == 0 {
                    return Err(GodecError::RankCollapsed { iterations });
                }
                rank = res.effective_rank;
                s = DenseMatrix::zeros(x.rows(), x.cols())?;
                continue 'run;
            }
            let xl = x.sub(&res.approx)?;
            s = hard_threshold_entries(&xl, cfg.cardinality);
            let objective = xl.sub(&s)?.frobenius_norm_sq();
            trace.push(objective);
            let done = objective / norm_x_sq <= cfg.tolerance;
            current = Some((res.approx, res.effective_rank));
            if done {
                converged = true;
                break 'run;
            }
        }
    }
    // A run can exhaust its budget on restarts without completing a single
    // update; the zero estimate is the honest "nothing fitted" answer.
    let (low_rank, eff) = match current {
        Some(pair) => pair,
        None => (DenseMatrix::zeros(x.rows(), x.cols())?, 0),
    };
    Ok(DecompResult {
        low_rank,
        sparse: s,
        objective_trace: trace,
        iterations,
        converged,
        effective_rank: eff,
    })
}
