//! Low-rank approximation by bilateral random projection: a closed-form
//! construction from two thin Gaussian sketches, a power-iteration variant
//! for slowly decaying spectra, and evaluators for the error ceilings that
//! the construction provably satisfies.

use crate::matrix::{DenseMatrix, MatError};
use crate::qr::qr_thin;
use crate::rng::{gaussian_matrix, RngSeed};
use crate::svd::{effective_rank, spectral_norm, svd_full};

use thiserror::Error;

/// Relative cutoff for numerical rank detection on the small core matrix.
const CORE_RANK_CUTOFF: f64 = 1e-12;
/// Relative cutoff for the effective rank reported on results.
const REPORT_RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum BrpError {
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Settings for the projection-based approximation.
#[derive(Debug, Clone)]
pub struct BrpConfig {
    /// Target rank of the approximation (number of sketch columns).
    pub rank: usize,
    /// Power-iteration exponent; 0 selects the closed-form path.
    pub power: usize,
    /// Extra sketch columns beyond `rank`. They sharpen the sketch and feed
    /// the bound evaluators; the returned approximation is truncated back to
    /// `rank`, so its rank never exceeds the target.
    pub oversample: usize,
    /// Rebuild each sketch from the other (one extra pass over the matrix).
    /// On by default; it tightens the approximation substantially.
    pub refine: bool,
    pub seed: RngSeed,
}

impl BrpConfig {
    pub fn new(rank: usize, seed: RngSeed) -> Self {
        Self {
            rank,
            power: 0,
            oversample: 5,
            refine: true,
            seed,
        }
    }
}

/// A low-rank approximation together with rank diagnostics.
#[derive(Debug, Clone)]
pub struct BrpResult {
    pub approx: DenseMatrix,
    /// Numerical rank of the returned matrix (singular values above
    /// `1e-10` times the largest).
    pub effective_rank: usize,
    /// True when the requested rank exceeded the numerical rank of the
    /// sketch core, forcing a retry at reduced rank.
    pub rank_shrunk: bool,
}

/// Spectral-error ceiling evaluated at a point, with the probability that
/// a random draw escapes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationBound {
    pub rhs: f64,
    pub failure_probability: f64,
}

/// One draw's observed spectral error next to each provable ceiling.
///
/// `average_rhs` bounds the mean over draws and `deviation` bounds the tail,
/// so their `*_holds` flags record only where this particular draw landed.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub observed_error: f64,
    pub deterministic_rhs: f64,
    pub average_rhs: Option<f64>,
    pub deviation: Option<DeviationBound>,
    pub deterministic_holds: bool,
    pub average_holds: Option<bool>,
    pub deviation_holds: Option<bool>,
}

struct Projections {
    y1f: DenseMatrix,
    y2: DenseMatrix,
    core: DenseMatrix,
}

/// Applies `(X X^T)^q X` to a block with `x.cols()` rows, without ever
/// forming the powered matrix.
fn power_apply_left(
    x: &DenseMatrix,
    b: &DenseMatrix,
    q: usize,
) -> Result<DenseMatrix, MatError> {
    let mut t = x.matmul(b)?;
    for _ in 0..q {
        let s = x.matmul_at(&t)?;
        t = x.matmul(&s)?;
    }
    Ok(t)
}

/// Applies `X^T (X X^T)^q` to a block with `x.rows()` rows.
fn power_apply_right(
    x: &DenseMatrix,
    b: &DenseMatrix,
    q: usize,
) -> Result<DenseMatrix, MatError> {
    let mut t = b.clone();
    for _ in 0..q {
        let s = x.matmul_at(&t)?;
        t = x.matmul(&s)?;
    }
    x.matmul_at(&t)
}

/// Refined sketches: the right sketch is rebuilt from the left one and the
/// left one from the rebuilt right, so both inherit a full pass of the
/// matrix' action on the initial draw.
fn refined_projections(
    x: &DenseMatrix,
    a1: &DenseMatrix,
    q: usize,
) -> Result<Projections, MatError> {
    let y1_old = power_apply_left(x, a1, q)?;
    let y2 = power_apply_right(x, &y1_old, q)?;
    let y1f = power_apply_left(x, &y2, q)?;
    let core = y1_old.matmul_at(&y1f)?;
    Ok(Projections { y1f, y2, core })
}

/// Unrefined sketches from two independent draws.
fn raw_projections(
    x: &DenseMatrix,
    a1: &DenseMatrix,
    a2: &DenseMatrix,
    q: usize,
) -> Result<Projections, MatError> {
    let y1 = power_apply_left(x, a1, q)?;
    let y2 = power_apply_right(x, a2, q)?;
    let core = a2.matmul_at(&y1)?;
    Ok(Projections { y1f: y1, y2, core })
}

/// Pseudo-inverse of the core plus its detected numerical rank, from one SVD.
fn analyze_core(core: &DenseMatrix) -> Result<(DenseMatrix, usize), MatError> {
    let f = svd_full(core)?;
    let top = f.sigma.first().copied().unwrap_or(0.0);
    let cutoff = top * CORE_RANK_CUTOFF;
    let detected = f.sigma.iter().filter(|&&s| s > cutoff).count();
    let k = f.sigma.len();
    let scaled_v = DenseMatrix::from_fn(core.cols(), k, |i, j| {
        if f.sigma[j] > cutoff {
            f.v.get(i, j) / f.sigma[j]
        } else {
            0.0
        }
    })?;
    let pinv = scaled_v.matmul_bt(&f.u)?;
    Ok((pinv, detected))
}

/// Builds the approximation from sketches and the core pseudo-inverse,
/// truncated to at most `rank`. Returns the matrix and its effective rank,
/// measured on the small factor so no large SVD is ever needed.
fn assemble(
    proj: &Projections,
    core_pinv: &DenseMatrix,
    q: usize,
    rank: usize,
) -> Result<(DenseMatrix, usize), BrpError> {
    let (q1, r1) = qr_thin(&proj.y1f)?;
    let (q2, r2) = qr_thin(&proj.y2)?;
    let m_small = r1.matmul(core_pinv)?.matmul_bt(&r2)?;
    let f = svd_full(&m_small)?;
    let w = f.sigma.len();
    if q == 0 && rank >= w {
        // No truncation needed: recompose from the sketches directly.
        let eff = effective_rank(&f.sigma, REPORT_RANK_CUTOFF);
        let l = proj.y1f.matmul(core_pinv)?.matmul_bt(&proj.y2)?;
        return Ok((l, eff));
    }
    // Power path: the sketches capture the (2q+1)-th power of the matrix,
    // so the small factor's singular values are rooted before recomposition.
    // Keeping only the top `rank` of them truncates the result, which is
    // exactly its best rank-`rank` approximation since the outer factors
    // are orthonormal.
    let kept = rank.min(w);
    let exponent = 1.0 / (2.0 * q as f64 + 1.0);
    let values: Vec<f64> = if q == 0 {
        f.sigma[..kept].to_vec()
    } else {
        f.sigma[..kept].iter().map(|s| s.powf(exponent)).collect()
    };
    let eff = effective_rank(&values, REPORT_RANK_CUTOFF);
    let scaled_u = DenseMatrix::from_fn(m_small.rows(), kept, |i, j| f.u.get(i, j) * values[j])?;
    let v_kept = DenseMatrix::from_fn(m_small.cols(), kept, |i, j| f.v.get(i, j))?;
    let root = scaled_u.matmul_bt(&v_kept)?;
    let l = q1.matmul(&root)?.matmul_bt(&q2)?;
    Ok((l, eff))
}

fn validate_config(x: &DenseMatrix, cfg: &BrpConfig) -> Result<(), BrpError> {
    if cfg.rank == 0 {
        return Err(BrpError::InvalidParameter {
            name: "rank",
            why: "must be at least 1".to_string(),
        });
    }
    let k = x.rows().min(x.cols());
    if cfg.rank + cfg.oversample > k {
        return Err(BrpError::InvalidParameter {
            name: "rank",
            why: format!(
                "rank {} + oversample {} exceeds min dimension {k}",
                cfg.rank, cfg.oversample
            ),
        });
    }
    Ok(())
}

fn run_config(x: &DenseMatrix, cfg: &BrpConfig) -> Result<BrpResult, BrpError> {
    let mut rank = cfg.rank;
    let mut shrunk = false;
    for attempt in 0usize.. {
        if rank == 0 {
            return Ok(BrpResult {
                approx: DenseMatrix::zeros(x.rows(), x.cols())?,
                effective_rank: 0,
                rank_shrunk: true,
            });
        }
        let label = attempt.to_string();
        let width = rank + cfg.oversample;
        let a1 = gaussian_matrix(x.cols(), width, 1.0, &cfg.seed.derive("a1").derive(&label))?;
        let proj = if cfg.refine {
            refined_projections(x, &a1, cfg.power)?
        } else {
            let a2 =
                gaussian_matrix(x.rows(), width, 1.0, &cfg.seed.derive("a2").derive(&label))?;
            raw_projections(x, &a1, &a2, cfg.power)?
        };
        let (core_pinv, detected) = analyze_core(&proj.core)?;
        if detected < rank {
            // The sketch core cannot support the requested rank; retry the
            // whole construction at the detected rank.
            rank = detected;
            shrunk = true;
            continue;
        }
        let (approx, eff) = assemble(&proj, &core_pinv, cfg.power, rank)?;
        return Ok(BrpResult {
            approx,
            effective_rank: eff,
            rank_shrunk: shrunk,
        });
    }
    unreachable!("rank strictly decreases until the loop returns");
}

/// Closed-form low-rank approximation from bilateral sketches (`power` must
/// be 0). Deterministic for a fixed seed. A rank-deficient sketch core is
/// never an error: the rank shrinks and the result carries a warning flag.
pub fn brp_approx(x: &DenseMatrix, cfg: &BrpConfig) -> Result<BrpResult, BrpError> {
    validate_config(x, cfg)?;
    if cfg.power != 0 {
        return Err(BrpError::InvalidParameter {
            name: "power",
            why: format!("closed-form path requires power = 0, got {}", cfg.power),
        });
    }
    run_config(x, cfg)
}

/// Power-scheme variant (`power >= 1`): sketches are taken of the matrix
/// with its singular spectrum raised to the `2*power + 1` power, which
/// sharpens slowly decaying spectra, and the small factor is rooted back.
/// The powered matrix is never formed; only block products with the input
/// are taken.
pub fn brp_power(x: &DenseMatrix, cfg: &BrpConfig) -> Result<BrpResult, BrpError> {
    validate_config(x, cfg)?;
    if cfg.power == 0 {
        return Err(BrpError::InvalidParameter {
            name: "power",
            why: "power path requires power >= 1".to_string(),
        });
    }
    run_config(x, cfg)
}

fn validate_a1(x: &DenseMatrix, a1: &DenseMatrix) -> Result<(), BrpError> {
    if a1.rows() != x.cols() {
        return Err(BrpError::InvalidParameter {
            name: "a1",
            why: format!(
                "sketch must have {} rows to match the input's columns, got {}",
                x.cols(),
                a1.rows()
            ),
        });
    }
    if a1.cols() > x.rows().min(x.cols()) {
        return Err(BrpError::InvalidParameter {
            name: "a1",
            why: format!(
                "sketch width {} exceeds min dimension {}",
                a1.cols(),
                x.rows().min(x.cols())
            ),
        });
    }
    Ok(())
}

/// Single-shot refined construction from a caller-supplied sketch. No rank
/// retry happens: the result reports the detected core rank instead. This is
/// the construction the error ceilings analyze, so statistical tests feed it
/// the same draw they hand the evaluators.
pub fn brp_approx_seeded(x: &DenseMatrix, a1: &DenseMatrix) -> Result<BrpResult, BrpError> {
    validate_a1(x, a1)?;
    let proj = refined_projections(x, a1, 0)?;
    let (core_pinv, detected) = analyze_core(&proj.core)?;
    let (approx, eff) = assemble(&proj, &core_pinv, 0, a1.cols())?;
    Ok(BrpResult {
        approx,
        effective_rank: eff,
        rank_shrunk: detected < a1.cols(),
    })
}

/// Single-shot power-scheme construction from a caller-supplied sketch.
pub fn brp_power_seeded(
    x: &DenseMatrix,
    a1: &DenseMatrix,
    power: usize,
) -> Result<BrpResult, BrpError> {
    validate_a1(x, a1)?;
    if power == 0 {
        return Err(BrpError::InvalidParameter {
            name: "power",
            why: "power path requires power >= 1".to_string(),
        });
    }
    let proj = refined_projections(x, a1, power)?;
    let (core_pinv, detected) = analyze_core(&proj.core)?;
    let (approx, eff) = assemble(&proj, &core_pinv, power, a1.cols())?;
    Ok(BrpResult {
        approx,
        effective_rank: eff,
        rank_shrunk: detected < a1.cols(),
    })
}

fn validate_sigma(sigma: &[f64], r: usize) -> Result<(), BrpError> {
    if r == 0 {
        return Err(BrpError::InvalidParameter {
            name: "r",
            why: "must be at least 1".to_string(),
        });
    }
    if r > sigma.len() {
        return Err(BrpError::InvalidParameter {
            name: "r",
            why: format!("exceeds spectrum length {}", sigma.len()),
        });
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(BrpError::InvalidParameter {
                name: "sigma",
                why: format!("entry {i} is {s}; values must be finite and nonnegative"),
            });
        }
        if i > 0 && s > sigma[i - 1] {
            return Err(BrpError::InvalidParameter {
                name: "sigma",
                why: format!("entry {i} increases ({} -> {s}); must be nonincreasing", sigma[i - 1]),
            });
        }
    }
    Ok(())
}

/// Per-draw spectral-error ceiling for the refined construction seeded by a
/// raw Gaussian sketch.
///
/// `sigma` is the full nonincreasing spectrum of the target and `vta1` the
/// right singular basis applied to the very sketch used for the
/// approximation (`V^T * A1`, one row per singular value). Returns
/// `sqrt(|B|^2 + sigma[r]^2)` with
/// `B = diag(tail)^2 * tail-rows * pinv(head-rows) * diag(head)^-1`,
/// in spectral norm; `+inf` when the head block is rank-deficient (the
/// ceiling's hypothesis fails); `0` when the spectrum ends at `r`.
pub fn deterministic_bound_rhs(
    sigma: &[f64],
    r: usize,
    vta1: &DenseMatrix,
) -> Result<f64, BrpError> {
    validate_sigma(sigma, r)?;
    if vta1.rows() != sigma.len() {
        return Err(BrpError::InvalidParameter {
            name: "vta1",
            why: format!(
                "needs one row per singular value ({}), got {}",
                sigma.len(),
                vta1.rows()
            ),
        });
    }
    let k = sigma.len();
    if r == k || sigma[r] == 0.0 {
        return Ok(0.0);
    }
    let w = vta1.cols();
    let v1 = DenseMatrix::from_fn(r, w, |i, j| vta1.get(i, j))?;
    let f1 = svd_full(&v1)?;
    if effective_rank(&f1.sigma, CORE_RANK_CUTOFF) < r {
        return Ok(f64::INFINITY);
    }
    let cutoff = f1.sigma[0] * CORE_RANK_CUTOFF;
    let scaled_v = DenseMatrix::from_fn(w, f1.sigma.len(), |i, j| {
        if f1.sigma[j] > cutoff {
            f1.v.get(i, j) / f1.sigma[j]
        } else {
            0.0
        }
    })?;
    let v1_pinv = scaled_v.matmul_bt(&f1.u)?;

    // B = diag(tail)^2 * V2^T A1 * pinv(V1^T A1) * diag(head)^-1.
    let scaled_tail =
        DenseMatrix::from_fn(k - r, w, |i, j| sigma[r + i] * sigma[r + i] * vta1.get(r + i, j))?;
    let t = scaled_tail.matmul(&v1_pinv)?;
    let b = DenseMatrix::from_fn(k - r, r, |i, j| t.get(i, j) / sigma[j])?;
    let bnorm = spectral_norm(&b)?;
    Ok((bnorm * bnorm + sigma[r] * sigma[r]).sqrt())
}

/// Ceiling on the mean spectral error over sketch draws, for oversampling
/// `p >= 2`:
/// `(sqrt(sum_{i<=r} sigma[r]^2/sigma[i-1]^2 / (p-1)) + 1) * sigma[r]` plus
/// `(e*sqrt(r+p)/p) * sqrt(sum_{i>r} sigma[i]^2 / sigma[r-1]^2)`.
pub fn average_bound_rhs(sigma: &[f64], r: usize, p: usize) -> Result<f64, BrpError> {
    validate_sigma(sigma, r)?;
    if p < 2 {
        return Err(BrpError::InvalidParameter {
            name: "p",
            why: format!("mean ceiling requires oversampling >= 2, got {p}"),
        });
    }
    let k = sigma.len();
    if r == k || sigma[r] == 0.0 {
        return Ok(0.0);
    }
    let lam_tail = sigma[r];
    let head_sum: f64 = (0..r).map(|i| (lam_tail / sigma[i]).powi(2)).sum();
    let term1 = ((head_sum / (p as f64 - 1.0)).sqrt() + 1.0) * lam_tail;
    let tail_sum: f64 = (r..k).map(|i| (sigma[i] / sigma[r - 1]).powi(2)).sum();
    let term2 = (std::f64::consts::E * ((r + p) as f64).sqrt() / p as f64) * tail_sum.sqrt();
    Ok(term1 + term2)
}

/// Tail ceiling on the spectral error, valid except with probability
/// `exp(-u^2/2) + 4 t^-p + t^-(p+1)`. Requires `p >= 4` and `u, t >= 1`.
pub fn deviation_bound_rhs(
    sigma: &[f64],
    r: usize,
    p: usize,
    u: f64,
    t: f64,
) -> Result<DeviationBound, BrpError> {
    validate_sigma(sigma, r)?;
    if p < 4 {
        return Err(BrpError::InvalidParameter {
            name: "p",
            why: format!("tail ceiling requires oversampling >= 4, got {p}"),
        });
    }
    if !(u.is_finite() && u >= 1.0) || !(t.is_finite() && t >= 1.0) {
        return Err(BrpError::InvalidParameter {
            name: "u",
            why: format!("quantile parameters need u, t >= 1, got u = {u}, t = {t}"),
        });
    }
    let failure_probability = (-u * u / 2.0).exp() + 4.0 * t.powi(-(p as i32))
        + t.powi(-(p as i32 + 1));
    let k = sigma.len();
    if r == k || sigma[r] == 0.0 {
        return Ok(DeviationBound {
            rhs: 0.0,
            failure_probability,
        });
    }
    let e = std::f64::consts::E;
    let inv_head_sum: f64 = (0..r).map(|i| 1.0 / sigma[i]).sum();
    let coeff = 1.0
        + t * (12.0 * r as f64 / p as f64).sqrt() * inv_head_sum.sqrt()
        + (e * ((r + p) as f64).sqrt() / (p as f64 + 1.0)) * t * u / sigma[r - 1];
    let tail_sq: f64 = (r..k).map(|i| sigma[i] * sigma[i]).sum();
    let rhs = coeff * sigma[r] * sigma[r]
        + (e * ((r + p) as f64).sqrt() / (p as f64 + 1.0)) * t / sigma[r - 1] * tail_sq.sqrt();
    Ok(DeviationBound {
        rhs,
        failure_probability,
    })
}

/// Runs one refined draw with `rank + oversample` sketch columns and lines
/// the observed spectral error up against every ceiling that applies.
pub fn bound_report(
    x: &DenseMatrix,
    cfg: &BrpConfig,
    u: f64,
    t: f64,
) -> Result<BoundReport, BrpError> {
    validate_config(x, cfg)?;
    if cfg.power != 0 {
        return Err(BrpError::InvalidParameter {
            name: "power",
            why: "error ceilings apply to the closed-form path (power = 0)".to_string(),
        });
    }
    let w = cfg.rank + cfg.oversample;
    let a1 = gaussian_matrix(x.cols(), w, 1.0, &cfg.seed.derive("bound-a1"))?;
    let res = brp_approx_seeded(x, &a1)?;
    let observed_error = spectral_norm(&x.sub(&res.approx)?)?;
    let f = svd_full(x)?;
    let vta1 = f.v.matmul_at(&a1)?;
    let deterministic_rhs = deterministic_bound_rhs(&f.sigma, cfg.rank, &vta1)?;
    let average_rhs = if cfg.oversample >= 2 {
        Some(average_bound_rhs(&f.sigma, cfg.rank, cfg.oversample)?)
    } else {
        None
    };
    let deviation = if cfg.oversample >= 4 && u >= 1.0 && t >= 1.0 {
        Some(deviation_bound_rhs(&f.sigma, cfg.rank, cfg.oversample, u, t)?)
    } else {
        None
    };
    Ok(BoundReport {
        observed_error,
        deterministic_rhs,
        deterministic_holds: observed_error <= deterministic_rhs,
        average_holds: average_rhs.map(|a| observed_error <= a),
        deviation_holds: deviation.as_ref().map(|d| observed_error <= d.rhs),
        average_rhs,
        deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rel_error;
    use crate::svd::svd_truncate;

    fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
        let root = RngSeed::new(seed);
        let a = gaussian_matrix(m, r, 1.0, &root.derive("lr-a")).unwrap();
        let b = gaussian_matrix(r, n, 1.0, &root.derive("lr-b")).unwrap();
        a.matmul(&b).unwrap()
    }

    fn diag_matrix(n: usize, values: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j && i < values.len() {
                values[i]
            } else {
                0.0
            }
        })
        .unwrap()
    }

    fn spectral_err(x: &DenseMatrix, l: &DenseMatrix) -> f64 {
        spectral_norm(&x.sub(l).unwrap()).unwrap()
    }

    #[test]
    fn exact_rank_input_is_recovered_by_both_paths() {
        let x = low_rank(30, 20, 2, 1);
        let norm = x.frobenius_norm();
        let flat = brp_approx(&x, &BrpConfig {
            rank: 2,
            power: 0,
            oversample: 0,
            refine: true,
            seed: RngSeed::new(5),
        })
        .unwrap();
        let ratio = x.sub(&flat.approx).unwrap().frobenius_norm() / norm;
        assert!(ratio <= 1e-10, "closed form missed an exact rank-2 input: {ratio:e}");
        assert!(!flat.rank_shrunk);
        assert_eq!(flat.effective_rank, 2);

        for q in 1..=3 {
            let res = brp_power(&x, &BrpConfig {
                rank: 2,
                power: q,
                oversample: 0,
                refine: true,
                seed: RngSeed::new(5),
            })
            .unwrap();
            let rel = rel_error(&x, &res.approx).unwrap();
            assert!(rel <= 1e-9, "power path q={q} missed exact rank-2 input: {rel:e}");
        }
    }

    #[test]
    fn unrefined_path_also_recovers_exact_rank_inputs() {
        let x = low_rank(18, 14, 3, 9);
        let res = brp_approx(&x, &BrpConfig {
            rank: 3,
            power: 0,
            oversample: 0,
            refine: false,
            seed: RngSeed::new(2),
        })
        .unwrap();
        let rel = rel_error(&x, &res.approx).unwrap();
        assert!(rel <= 1e-9, "independent-sketch path missed exact input: {rel:e}");
    }

    #[test]
    fn rank_one_truncation_error_is_bracketed_by_oracle_and_ceiling() {
        // Two nonzero singular values; a rank-1 approximation can never do
        // better than the second one (exactly 1e-3 here) and the per-draw
        // ceiling caps it from above.
        let x = diag_matrix(10, &[1.0, 1e-3]);
        let f = svd_full(&x).unwrap();
        for s in 0..20u64 {
            let a1 = gaussian_matrix(10, 1, 1.0, &RngSeed::new(s).derive("bracket")).unwrap();
            let res = brp_approx_seeded(&x, &a1).unwrap();
            let err = spectral_err(&x, &res.approx);
            let vta1 = f.v.matmul_at(&a1).unwrap();
            let rhs = deterministic_bound_rhs(&f.sigma, 1, &vta1).unwrap();
            assert!(
                err >= 1e-3 * (1.0 - 1e-9),
                "seed {s}: error {err:e} dipped below the rank-1 floor"
            );
            assert!(
                err <= rhs,
                "seed {s}: error {err:e} escaped its per-draw ceiling {rhs:e}"
            );
        }
    }

    #[test]
    fn hilbert_error_stays_within_frozen_factor_of_optimal() {
        let x = DenseMatrix::from_fn(8, 8, |i, j| 1.0 / ((i + j + 1) as f64)).unwrap();
        let sigma4 = 1.467_688_117_742e-3;
        for s in 0..100u64 {
            let res = brp_approx(&x, &BrpConfig {
                rank: 3,
                power: 0,
                oversample: 2,
                refine: true,
                seed: RngSeed::new(s),
            })
            .unwrap();
            let err = spectral_err(&x, &res.approx);
            assert!(
                err <= 1.5 * sigma4,
                "seed {s}: spectral error {err:e} exceeded 1.5x the rank-3 optimum"
            );
        }
    }

    #[test]
    fn power_iteration_beats_the_flat_path_on_slow_decay() {
        let values: Vec<f64> = (0..20).map(|i| 0.9f64.powi(i)).collect();
        let x = diag_matrix(20, &values);
        let mut mean_flat = 0.0;
        let mut mean_power = 0.0;
        for s in 0..50u64 {
            let a1 = gaussian_matrix(20, 3, 1.0, &RngSeed::new(s).derive("decay")).unwrap();
            mean_flat += spectral_err(&x, &brp_approx_seeded(&x, &a1).unwrap().approx);
            mean_power += spectral_err(&x, &brp_power_seeded(&x, &a1, 2).unwrap().approx);
        }
        assert!(
            mean_power <= mean_flat,
            "power q=2 mean {mean_power:e} should not exceed flat mean {mean_flat:e}"
        );
    }

    #[test]
    fn power_path_matches_explicit_cubed_matrix_oracle_on_psd_input() {
        // For q=1 the sketches see the matrix cubed. Forming the cube
        // explicitly, approximating it the same way with the same draw, and
        // rooting its singular values must land on the same matrix.
        let g = gaussian_matrix(15, 15, 1.0, &RngSeed::new(3).derive("psd")).unwrap();
        let x = g.matmul_bt(&g).unwrap().scale(1.0 / 15.0).unwrap();
        let a1 = gaussian_matrix(15, 4, 1.0, &RngSeed::new(3).derive("oracle-a1")).unwrap();

        let fast = brp_power_seeded(&x, &a1, 1).unwrap().approx;

        let x3 = x.matmul(&x).unwrap().matmul(&x).unwrap();
        let l3 = brp_approx_seeded(&x3, &a1).unwrap().approx;
        let f = svd_full(&l3).unwrap();
        let cutoff = f.sigma[0] * 1e-12;
        let kept: Vec<usize> = (0..f.sigma.len()).filter(|&j| f.sigma[j] > cutoff).collect();
        let scaled_u = DenseMatrix::from_fn(15, kept.len(), |i, j| {
            f.u.get(i, kept[j]) * f.sigma[kept[j]].cbrt()
        })
        .unwrap();
        let vr = DenseMatrix::from_fn(15, kept.len(), |i, j| f.v.get(i, kept[j])).unwrap();
        let oracle = scaled_u.matmul_bt(&vr).unwrap();

        let diff = fast.sub(&oracle).unwrap().max_abs();
        assert!(diff <= 1e-6, "power path strayed {diff:e} from the cubed-matrix oracle");
    }

    #[test]
    fn per_draw_ceiling_holds_on_a_graded_spectrum() {
        let x = diag_matrix(3, &[2.0, 1.0, 0.1]);
        let f = svd_full(&x).unwrap();
        for s in 0..50u64 {
            let a1 = gaussian_matrix(3, 2, 1.0, &RngSeed::new(s).derive("graded")).unwrap();
            let res = brp_approx_seeded(&x, &a1).unwrap();
            let err = spectral_err(&x, &res.approx);
            let vta1 = f.v.matmul_at(&a1).unwrap();
            let rhs = deterministic_bound_rhs(&f.sigma, 2, &vta1).unwrap();
            assert!(rhs.is_finite(), "seed {s}: full-width sketch should give a finite ceiling");
            assert!(err <= rhs, "seed {s}: error {err:e} escaped ceiling {rhs:e}");
        }
    }

    #[test]
    fn per_draw_ceiling_edge_cases() {
        // Spectrum ends at r: ceiling is exactly zero.
        let sigma = [3.0, 2.0];
        let vta1 = gaussian_matrix(2, 2, 1.0, &RngSeed::new(1).derive("v")).unwrap();
        assert_eq!(deterministic_bound_rhs(&sigma, 2, &vta1).unwrap(), 0.0);

        // Head block of the projected sketch rank-deficient: ceiling infinite.
        let sigma = [3.0, 2.0, 1.0];
        let degenerate =
            DenseMatrix::from_vec(3, 2, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(deterministic_bound_rhs(&sigma, 2, &degenerate).unwrap().is_infinite());

        // Trailing zeros behave like an exactly low-rank spectrum.
        let sigma = [3.0, 2.0, 0.0];
        let vta1 = gaussian_matrix(3, 2, 1.0, &RngSeed::new(2).derive("v")).unwrap();
        assert_eq!(deterministic_bound_rhs(&sigma, 2, &vta1).unwrap(), 0.0);
    }

    #[test]
    fn mean_ceiling_matches_hand_evaluation() {
        // spectrum (1, 1e-6), r = 1, p = 2:
        // (sqrt(1e-12) + 1) * 1e-6 + (e*sqrt(3)/2) * 1e-6.
        let got = average_bound_rhs(&[1.0, 1e-6], 1, 2).unwrap();
        let expect = 1e-6 * (1.0 + std::f64::consts::E * 3.0f64.sqrt() / 2.0);
        assert!(
            ((got - expect) / expect).abs() < 1e-5,
            "mean ceiling {got:e} should be near {expect:e}"
        );
    }

    #[test]
    fn mean_ceiling_is_zero_for_low_rank_and_monotone_in_oversampling() {
        assert_eq!(average_bound_rhs(&[5.0, 1.0, 0.0, 0.0], 2, 3).unwrap(), 0.0);
        let sigma: Vec<f64> = (0..30).map(|i| 0.8f64.powi(i)).collect();
        let mut prev = f64::INFINITY;
        for p in 2..=20 {
            let rhs = average_bound_rhs(&sigma, 4, p).unwrap();
            assert!(
                rhs <= prev + 1e-15,
                "mean ceiling increased from {prev:e} to {rhs:e} at oversampling {p}"
            );
            prev = rhs;
        }
        assert!(average_bound_rhs(&sigma, 4, 1).is_err(), "oversampling below 2 must error");
    }

    #[test]
    fn tail_ceiling_edges_and_monotonicity() {
        let dev = deviation_bound_rhs(&[5.0, 1.0, 0.0], 2, 4, 2.0, 2.0).unwrap();
        assert_eq!(dev.rhs, 0.0, "low-rank spectrum should zero the tail ceiling");

        // As t grows the failure probability collapses to the Gaussian term.
        let u = 2.0;
        let far = deviation_bound_rhs(&[1.0, 0.5], 1, 4, u, 1e9).unwrap();
        let gauss = (-u * u / 2.0f64).exp();
        assert!(
            (far.failure_probability - gauss).abs() < 1e-12,
            "failure probability should approach exp(-u^2/2)"
        );

        let sigma: Vec<f64> = (0..10).map(|i| 0.7f64.powi(i)).collect();
        let mut prev = 0.0;
        for step in 1..=8 {
            let t = step as f64;
            let d = deviation_bound_rhs(&sigma, 3, 5, 1.5, t).unwrap();
            assert!(d.rhs >= prev, "tail ceiling must not decrease in t");
            prev = d.rhs;
        }
        let mut prev = 0.0;
        for step in 1..=8 {
            let u = step as f64;
            let d = deviation_bound_rhs(&sigma, 3, 5, u, 1.5).unwrap();
            assert!(d.rhs >= prev, "tail ceiling must not decrease in u");
            prev = d.rhs;
        }

        assert!(deviation_bound_rhs(&sigma, 3, 3, 1.5, 1.5).is_err());
        assert!(deviation_bound_rhs(&sigma, 3, 5, 0.5, 1.5).is_err());
        assert!(deviation_bound_rhs(&sigma, 3, 5, 1.5, 0.5).is_err());
    }

    #[test]
    fn singular_core_shrinks_rank_and_flags_it() {
        let x = low_rank(12, 10, 1, 4);
        let res = brp_approx(&x, &BrpConfig {
            rank: 3,
            power: 0,
            oversample: 0,
            refine: true,
            seed: RngSeed::new(6),
        })
        .unwrap();
        assert!(res.rank_shrunk, "rank-1 input at requested rank 3 must shrink");
        assert_eq!(res.effective_rank, 1);
        let rel = rel_error(&x, &res.approx).unwrap();
        assert!(rel <= 1e-18, "shrunken approximation should still be exact: {rel:e}");
    }

    #[test]
    fn zero_matrix_shrinks_to_the_zero_approximation() {
        let x = DenseMatrix::zeros(8, 6).unwrap();
        let res = brp_approx(&x, &BrpConfig {
            rank: 2,
            power: 0,
            oversample: 0,
            refine: true,
            seed: RngSeed::new(1),
        })
        .unwrap();
        assert!(res.rank_shrunk);
        assert_eq!(res.effective_rank, 0);
        assert!(res.approx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_reproduces_the_approximation_exactly() {
        let x = gaussian_matrix(14, 11, 1.0, &RngSeed::new(8).derive("x")).unwrap();
        let cfg = BrpConfig::new(3, RngSeed::new(42));
        let a = brp_approx(&x, &cfg).unwrap();
        let b = brp_approx(&x, &cfg).unwrap();
        assert_eq!(a.approx, b.approx);
        let other = brp_approx(&x, &BrpConfig::new(3, RngSeed::new(43))).unwrap();
        assert_ne!(a.approx, other.approx, "different seeds should draw different sketches");
    }

    #[test]
    fn output_rank_never_exceeds_the_requested_rank() {
        let x = gaussian_matrix(15, 12, 1.0, &RngSeed::new(10).derive("full")).unwrap();
        let res = brp_approx(&x, &BrpConfig::new(4, RngSeed::new(0))).unwrap();
        assert_eq!(res.effective_rank, 4);
        let f = svd_full(&res.approx).unwrap();
        assert!(
            f.sigma[4] <= 1e-10 * f.sigma[0],
            "fifth singular value {:e} betrays rank above 4",
            f.sigma[4]
        );
        // The approximation is also no better than the optimal truncation.
        let opt = svd_truncate(&x, 4).unwrap();
        let err_opt = x.sub(&opt).unwrap().frobenius_norm();
        let err_brp = x.sub(&res.approx).unwrap().frobenius_norm();
        assert!(err_brp >= err_opt * (1.0 - 1e-9));
    }

    #[test]
    fn parameter_violations_are_rejected() {
        let x = DenseMatrix::zeros(6, 5).unwrap();
        let seed = RngSeed::new(0);
        assert!(brp_approx(&x, &BrpConfig { rank: 0, power: 0, oversample: 0, refine: true, seed: seed.clone() }).is_err());
        assert!(brp_approx(&x, &BrpConfig { rank: 4, power: 0, oversample: 2, refine: true, seed: seed.clone() }).is_err());
        assert!(brp_approx(&x, &BrpConfig { rank: 2, power: 1, oversample: 0, refine: true, seed: seed.clone() }).is_err());
        assert!(brp_power(&x, &BrpConfig { rank: 2, power: 0, oversample: 0, refine: true, seed: seed.clone() }).is_err());
        let bad_a1 = DenseMatrix::zeros(4, 2).unwrap();
        assert!(brp_approx_seeded(&x, &bad_a1).is_err(), "sketch row count must match cols");
        let wide_a1 = DenseMatrix::zeros(5, 6).unwrap();
        assert!(brp_approx_seeded(&x, &wide_a1).is_err(), "sketch wider than min dim");
    }

    #[test]
    fn bound_report_lines_up_one_draw_against_every_ceiling() {
        let x = gaussian_matrix(12, 10, 1.0, &RngSeed::new(19).derive("rep")).unwrap();
        let cfg = BrpConfig {
            rank: 3,
            power: 0,
            oversample: 4,
            refine: true,
            seed: RngSeed::new(7),
        };
        let rep = bound_report(&x, &cfg, 2.0, 2.0).unwrap();
        assert!(rep.observed_error >= 0.0);
        assert!(rep.deterministic_rhs >= 0.0);
        assert_eq!(rep.deterministic_holds, rep.observed_error <= rep.deterministic_rhs);
        let avg = rep.average_rhs.expect("oversample 4 supports the mean ceiling");
        assert!(avg >= 0.0);
        let dev = rep.deviation.expect("oversample 4 supports the tail ceiling");
        assert!(dev.rhs >= 0.0 && dev.failure_probability > 0.0);
        assert_eq!(rep.average_holds, Some(rep.observed_error <= avg));
        assert_eq!(rep.deviation_holds, Some(rep.observed_error <= dev.rhs));
    }
}
