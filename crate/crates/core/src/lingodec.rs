//! Low-rank linear scoring with sparse anomalies.
//!
//! Learns a weight matrix `W` of bounded rank such that ratings factor as
//! `X ~ W * Z^T + S`, where `Z` holds item features and `S` absorbs sparse
//! anomalies. The rank-constrained least-squares step has a closed form:
//! after a thin QR of the feature matrix, it reduces to one truncated SVD
//! in the projected coordinates.

use crate::brp::{brp_power, BrpConfig, BrpError};
use crate::matrix::{DenseMatrix, MatError};
use crate::qr::{qr_thin, solve_upper_triangular};
use crate::rng::RngSeed;
use crate::svd::{pseudo_inverse, svd_truncate};
use crate::threshold::soft_threshold;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinGodecError {
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Brp(#[from] BrpError),
}

#[derive(Debug, Clone)]
pub struct LinGodecConfig {
    /// Rank budget for the weight matrix.
    pub rank: usize,
    /// l1 weight of the sparse part; zero disables it.
    pub lambda: f64,
    /// Stop once the relative objective change falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: RngSeed,
    /// Replace the exact truncated SVD in the weight update with the
    /// randomized bilateral-projection approximation. Off by default;
    /// worthwhile only for large problems.
    pub brp_accelerated: bool,
}

impl LinGodecConfig {
    pub fn new(rank: usize, lambda: f64, seed: RngSeed) -> Self {
        Self {
            rank,
            lambda,
            tolerance: 1e-9,
            max_iters: 100,
            seed,
            brp_accelerated: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinGodecResult {
    /// Learned weights, users x features, with rank at most the budget.
    pub weights: DenseMatrix,
    /// Sparse anomaly part, users x items.
    pub sparse: DenseMatrix,
    /// `|X - W Z^T - S|_F^2 + 2*lambda*|S|_1` after every alternation.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Predicted scores for new items: `w * z_new^T` (users x new items).
pub fn predict_scores(
    w: &DenseMatrix,
    z_new: &DenseMatrix,
) -> Result<DenseMatrix, LinGodecError> {
    if w.cols() != z_new.cols() {
        return Err(LinGodecError::InvalidParameter {
            name: "z_new",
            why: format!(
                "feature count {} does not match the weight matrix's {}",
                z_new.cols(),
                w.cols()
            ),
        });
    }
    Ok(w.matmul_bt(z_new)?)
}

fn validate(
    x: &DenseMatrix,
    z: &DenseMatrix,
    cfg: &LinGodecConfig,
) -> Result<(), LinGodecError> {
    if x.cols() != z.rows() {
        return Err(LinGodecError::InvalidParameter {
            name: "z",
            why: format!(
                "item count mismatch: x has {} columns but z has {} rows",
                x.cols(),
                z.rows()
            ),
        });
    }
    if z.max_abs() == 0.0 {
        return Err(LinGodecError::InvalidParameter {
            name: "z",
            why: "all feature columns are zero".to_string(),
        });
    }
    let cap = x.rows().min(z.cols());
    if cfg.rank == 0 || cfg.rank > cap {
        return Err(LinGodecError::InvalidParameter {
            name: "rank",
            why: format!("must be in 1..={cap}, got {}", cfg.rank),
        });
    }
    if !cfg.lambda.is_finite() || cfg.lambda < 0.0 {
        return Err(LinGodecError::InvalidParameter {
            name: "lambda",
            why: format!("must be finite and nonnegative, got {}", cfg.lambda),
        });
    }
    if !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(LinGodecError::InvalidParameter {
            name: "tolerance",
            why: format!("must be positive and finite, got {}", cfg.tolerance),
        });
    }
    if cfg.max_iters == 0 {
        return Err(LinGodecError::InvalidParameter {
            name: "max_iters",
            why: "must be at least 1".to_string(),
        });
    }
    Ok(())
}

/// Rank-constrained least squares `min |target - W Z^T|_F, rank(W) <= r`
/// in closed form, given the thin QR factors of `Z`.
fn weight_step(
    target: &DenseMatrix,
    qz: &DenseMatrix,
    rz: &DenseMatrix,
    rz_singular: bool,
    cfg: &LinGodecConfig,
    iteration: usize,
) -> Result<DenseMatrix, LinGodecError> {
    let proj = target.matmul(qz)?;
    let b = if cfg.brp_accelerated {
        let bcfg = BrpConfig {
            rank: cfg.rank,
            power: 2,
            oversample: 0,
            refine: true,
            seed: cfg.seed.derive("brp-w").derive(&iteration.to_string()),
        };
        brp_power(&proj, &bcfg)?.approx
    } else {
        svd_truncate(&proj, cfg.rank)?
    };
    if rz_singular {
        return Ok(b.matmul(&pseudo_inverse(&rz.transpose())?)?);
    }
    let mut w = DenseMatrix::zeros(b.rows(), b.cols())?;
    for i in 0..b.rows() {
        match solve_upper_triangular(rz, b.row(i)) {
            Some(sol) => {
                for (j, value) in sol.iter().enumerate() {
                    w.set(i, j, *value);
                }
            }
            None => return Ok(b.matmul(&pseudo_inverse(&rz.transpose())?)?),
        }
    }
    Ok(w)
}

/// Alternates the closed-form weight update with a soft-threshold update
/// of the sparse part until the objective stops moving.
pub fn lingodec(
    x: &DenseMatrix,
    z: &DenseMatrix,
    cfg: &LinGodecConfig,
) -> Result<LinGodecResult, LinGodecError> {
    validate(x, z, cfg)?;
    let (m, n) = (x.rows(), x.cols());
    let (qz, rz) = qr_thin(z)?;
    let dmax = (0..rz.rows()).map(|j| rz.get(j, j).abs()).fold(0.0f64, f64::max);
    let rz_singular = (0..rz.rows()).any(|j| rz.get(j, j).abs() <= 1e-12 * dmax);
    let mut warnings = Vec::new();
    if rz_singular {
        warnings.push(
            "feature matrix is rank-deficient; weight update falls back to a pseudo-inverse"
                .to_string(),
        );
    }

    let mut s = if cfg.lambda > 0.0 {
        soft_threshold(x, cfg.lambda)?
    } else {
        DenseMatrix::zeros(m, n)?
    };
    let mut w = DenseMatrix::zeros(m, z.cols())?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut f_prev = f64::INFINITY;

    for t in 0..cfg.max_iters {
        let target = x.sub(&s)?;
        w = weight_step(&target, &qz, &rz, rz_singular, cfg, t)?;
        let resid = x.sub(&w.matmul_bt(z)?)?;
        let after_s;
        if cfg.lambda > 0.0 {
            s = soft_threshold(&resid, cfg.lambda)?;
            after_s = resid.sub(&s)?;
        } else {
            after_s = resid;
        }
        let l1: f64 = s.data().iter().map(|e| e.abs()).sum();
        let f = after_s.frobenius_norm_sq() + 2.0 * cfg.lambda * l1;
        trace.push(f);
        iterations = t + 1;
        if f_prev.is_finite() && (f_prev - f).abs() <= cfg.tolerance * f_prev.max(f64::MIN_POSITIVE)
        {
            converged = true;
            break;
        }
        f_prev = f;
    }

    Ok(LinGodecResult {
        weights: w,
        sparse: s,
        objective_trace: trace,
        iterations,
        converged,
        warnings,
    })
}
