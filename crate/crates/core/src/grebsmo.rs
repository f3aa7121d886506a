//! Greedy factorized low-rank + sparse decomposition.
//!
//! The low-rank part is kept as an explicit product `U * V` whose rank grows
//! greedily: each phase polishes the factors and the sparse part at fixed
//! rank, then appends a few fresh directions harvested from the residual,
//! until the fit reaches tolerance or the rank budget runs out.

use crate::matrix::{DenseMatrix, MatError};
use crate::qr::qr_thin;
use crate::rng::{gaussian_matrix, RngSeed};
use crate::svd::svd_full;
use crate::threshold::soft_threshold;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrebError {
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// How new row directions are proposed from the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    /// Top right singular vectors of the residual (one SVD per increment).
    ExactSvd,
    /// Orthonormalized rows of a Gaussian sketch of the residual; far
    /// cheaper and calibrated to capture a comparable share of the
    /// residual's energy.
    RandomProjection,
}

#[derive(Debug, Clone)]
pub struct GrebConfig {
    /// Directions appended per rank increment.
    pub rank_step: usize,
    /// Rank of the initial random right factor.
    pub initial_rank: usize,
    /// Hard cap on the factor rank.
    pub max_rank: usize,
    /// Inner polishing iterations per fixed-rank phase. The loop also exits
    /// early once the relative objective change falls under a tenth of the
    /// tolerance.
    pub inner_iters: usize,
    /// l1 weight of the sparse part. Zero disables the sparse part
    /// entirely (it stays identically zero).
    pub lambda: f64,
    /// Stop once `|X - UV - S|_F / |X|_F` reaches this value.
    pub tolerance: f64,
    pub direction_mode: DirectionMode,
    pub seed: RngSeed,
}

impl GrebConfig {
    pub fn new(rank_step: usize, max_rank: usize, lambda: f64, seed: RngSeed) -> Self {
        Self {
            rank_step,
            initial_rank: rank_step,
            max_rank,
            inner_iters: 3,
            lambda,
            tolerance: 1e-7,
            direction_mode: DirectionMode::RandomProjection,
            seed,
        }
    }

    /// Conventional l1 weight for decomposition work at a given shape.
    pub fn default_lambda(rows: usize, cols: usize) -> f64 {
        1.0 / (rows.max(cols) as f64).sqrt()
    }
}

/// Decomposition in factored form: `X ~ left * right + sparse`.
#[derive(Debug, Clone)]
pub struct FactoredResult {
    /// Orthonormal-column left factor, `m x r`.
    pub left: DenseMatrix,
    /// Right factor, `r x n`.
    pub right: DenseMatrix,
    pub sparse: DenseMatrix,
    /// `|X - UV - S|_F^2 + 2*lambda*|S|_1` after every inner iteration.
    /// The l1 weight enters the tracked objective as `2*lambda`, matching
    /// the soft-threshold proximal step.
    pub objective_trace: Vec<f64>,
    /// Factor rank at the end of each phase.
    pub rank_schedule: Vec<usize>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Proposes `count` orthonormal rows approximating the dominant row space
/// of `residual`.
pub fn greedy_directions(
    residual: &DenseMatrix,
    count: usize,
    mode: DirectionMode,
    seed: &RngSeed,
) -> Result<DenseMatrix, GrebError> {
    let (m, n) = (residual.rows(), residual.cols());
    if count == 0 || count > m.min(n) {
        return Err(GrebError::InvalidParameter {
            name: "count",
            why: format!("must be in 1..={} for a {m} x {n} residual, got {count}", m.min(n)),
        });
    }
    match mode {
        DirectionMode::ExactSvd => {
            let f = svd_full(residual)?;
            Ok(DenseMatrix::from_fn(count, n, |i, j| f.v.get(j, i))?)
        }
        DirectionMode::RandomProjection => {
            let g = gaussian_matrix(count, m, 1.0, &seed.derive("sketch"))?;
            let p = g.matmul(residual)?;
            // Orthonormalize the sketch rows; QR of the transpose keeps the
            // row count even when the residual is rank-deficient.
            let (q, _) = qr_thin(&p.transpose())?;
            Ok(q.transpose())
        }
    }
}

/// Left factor update: orthonormal basis of `target * V^T`, dropping
/// linearly dependent rows of `V` first. Returns the basis, the surviving
/// rows of `V`, how many rows were dropped, and whether the update
/// degenerated completely (no usable direction at all).
fn orthonormal_left(
    target: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix, usize, bool), GrebError> {
    let mut v_cur = v.clone();
    let mut dropped_total = 0usize;
    loop {
        let a = target.matmul_bt(&v_cur)?;
        let (q, r) = qr_thin(&a)?;
        let dmax = (0..r.rows()).map(|j| r.get(j, j).abs()).fold(0.0f64, f64::max);
        let cutoff = dmax * 1e-12;
        let dropped: Vec<usize> = (0..r.rows())
            .filter(|&j| r.get(j, j).abs() <= cutoff)
            .collect();
        if dropped.is_empty() {
            return Ok((q, v_cur, dropped_total, false));
        }
        dropped_total += dropped.len();
        if dropped.len() == v_cur.rows() {
            // target * V^T vanished entirely; hand back a placeholder basis
            // so the factors stay well-formed with a zero product.
            let u = DenseMatrix::from_fn(target.rows(), 1, |i, _| if i == 0 { 1.0 } else { 0.0 })?;
            let vz = DenseMatrix::zeros(1, v_cur.cols())?;
            return Ok((u, vz, dropped_total, true));
        }
        let keep: Vec<usize> = (0..v_cur.rows()).filter(|j| !dropped.contains(j)).collect();
        v_cur = DenseMatrix::from_fn(keep.len(), v_cur.cols(), |i, j| v_cur.get(keep[i], j))?;
    }
}

/// Orthonormal basis of the rows of `v` (rows below the cutoff are skipped).
fn row_basis(v: &DenseMatrix) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..v.rows() {
        let mut row = v.row(i).to_vec();
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in row.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in row.iter_mut() {
                *x /= norm;
            }
            basis.push(row);
        }
    }
    basis
}

fn validate(x: &DenseMatrix, cfg: &GrebConfig) -> Result<(), GrebError> {
    let k = x.rows().min(x.cols());
    if cfg.rank_step == 0 {
        return Err(GrebError::InvalidParameter {
            name: "rank_step",
            why: "must be at least 1".to_string(),
        });
    }
    if cfg.inner_iters == 0 {
        return Err(GrebError::InvalidParameter {
            name: "inner_iters",
            why: "must be at least 1".to_string(),
        });
    }
    if cfg.initial_rank == 0 || cfg.initial_rank > cfg.max_rank {
        return Err(GrebError::InvalidParameter {
            name: "initial_rank",
            why: format!(
                "must be in 1..=max_rank ({}), got {}",
                cfg.max_rank, cfg.initial_rank
            ),
        });
    }
    if cfg.max_rank > k {
        return Err(GrebError::InvalidParameter {
            name: "max_rank",
            why: format!("exceeds min dimension {k}, got {}", cfg.max_rank),
        });
    }
    if !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(GrebError::InvalidParameter {
            name: "tolerance",
            why: format!("must be positive and finite, got {}", cfg.tolerance),
        });
    }
    if !cfg.lambda.is_finite() || cfg.lambda < 0.0 {
        return Err(GrebError::InvalidParameter {
            name: "lambda",
            why: format!("must be finite and nonnegative, got {}", cfg.lambda),
        });
    }
    Ok(())
}

/// Runs the greedy decomposition.
///
/// The sparse part receives one proximal update against the raw input
/// before the first factor update, so the initial factor directions are
/// harvested from sparse-corrected data rather than from the outliers.
pub fn grebsmo(x: &DenseMatrix, cfg: &GrebConfig) -> Result<FactoredResult, GrebError> {
    validate(x, cfg)?;
    let (m, n) = (x.rows(), x.cols());
    let norm_x = x.frobenius_norm();
    if norm_x == 0.0 {
        return Ok(FactoredResult {
            left: DenseMatrix::from_fn(m, 1, |i, _| if i == 0 { 1.0 } else { 0.0 })?,
            right: DenseMatrix::zeros(1, n)?,
            sparse: DenseMatrix::zeros(m, n)?,
            objective_trace: vec![0.0],
            rank_schedule: vec![1],
            converged: true,
            warnings: Vec::new(),
        });
    }

    let scale = (1.0 / n as f64).sqrt();
    let mut v = gaussian_matrix(cfg.initial_rank, n, scale, &cfg.seed.derive("v0"))?;
    let mut s = if cfg.lambda > 0.0 {
        soft_threshold(x, cfg.lambda)?
    } else {
        DenseMatrix::zeros(m, n)?
    };
    let mut u = DenseMatrix::from_fn(m, 1, |i, _| if i == 0 { 1.0 } else { 0.0 })?;
    let mut trace: Vec<f64> = Vec::new();
    let mut schedule: Vec<usize> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut converged = false;
    let mut resid_norm_sq = norm_x * norm_x;
    let mut phase = 0usize;

    'phases: loop {
        let mut f_prev = f64::INFINITY;
        for _ in 0..cfg.inner_iters {
            let target = x.sub(&s)?;
            let (q, v_kept, dropped, degenerate) = orthonormal_left(&target, &v)?;
            u = q;
            v = if degenerate {
                DenseMatrix::zeros(1, n)?
            } else {
                let _ = v_kept;
                u.matmul_at(&target)?
            };
            if dropped > 0 {
                warnings.push(format!(
                    "dropped {dropped} linearly dependent direction(s) during a factor update"
                ));
            }
            let resid_uv = x.sub(&u.matmul(&v)?)?;
            let after_s;
            if cfg.lambda > 0.0 {
                s = soft_threshold(&resid_uv, cfg.lambda)?;
                after_s = resid_uv.sub(&s)?;
            } else {
                after_s = resid_uv;
            }
            resid_norm_sq = after_s.frobenius_norm_sq();
            let l1: f64 = s.data().iter().map(|e| e.abs()).sum();
            let f = resid_norm_sq + 2.0 * cfg.lambda * l1;
            trace.push(f);
            if f_prev.is_finite() && (f_prev - f).abs() <= cfg.tolerance / 10.0 * f_prev {
                break;
            }
            f_prev = f;
        }

        schedule.push(v.rows());
        if resid_norm_sq.sqrt() / norm_x <= cfg.tolerance {
            converged = true;
            break 'phases;
        }
        if v.rows() >= cfg.max_rank {
            break 'phases;
        }

        let add = cfg.rank_step.min(cfg.max_rank - v.rows());
        let residual = x.sub(&u.matmul(&v)?)?.sub(&s)?;
        let dirs = greedy_directions(
            &residual,
            add,
            cfg.direction_mode,
            &cfg.seed.derive("dir").derive(&phase.to_string()),
        )?;
        // Append only directions independent of the current row space.
        let mut basis = row_basis(&v);
        let existing = basis.len();
        for i in 0..dirs.rows() {
            let mut row = dirs.row(i).to_vec();
            for _ in 0..2 {
                for b in &basis {
                    let proj: f64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in row.iter_mut().zip(b) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-10 {
                for x in row.iter_mut() {
                    *x /= norm;
                }
                basis.push(row);
            }
        }
        let fresh = basis.len() - existing;
        if fresh == 0 {
            warnings.push(
                "no independent directions left in the residual; stopping below max rank"
                    .to_string(),
            );
            break 'phases;
        }
        let old_rows = v.rows();
        let v_old = v;
        v = DenseMatrix::from_fn(old_rows + fresh, n, |i, j| {
            if i < old_rows {
                v_old.get(i, j)
            } else {
                basis[existing + (i - old_rows)][j]
            }
        })?;
        phase += 1;
    }

    Ok(FactoredResult {
        left: u,
        right: v,
        sparse: s,
        objective_trace: trace,
        rank_schedule: schedule,
        converged,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rel_error;
    use crate::svd::pseudo_inverse;

    fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
        let root = RngSeed::new(seed);
        let a = gaussian_matrix(m, r, 1.0, &root.derive("a")).unwrap();
        let b = gaussian_matrix(r, n, 1.0, &root.derive("b")).unwrap();
        a.matmul(&b).unwrap()
    }

    fn cfg(rank_step: usize, max_rank: usize, lambda: f64, seed: u64) -> GrebConfig {
        GrebConfig::new(rank_step, max_rank, lambda, RngSeed::new(seed))
    }

    #[test]
    fn rank_one_input_finishes_in_the_first_phase() {
        let x = low_rank(20, 15, 1, 1);
        let mut c = cfg(1, 5, 0.0, 2);
        c.tolerance = 1e-9;
        let res = grebsmo(&x, &c).unwrap();
        assert!(res.converged);
        assert_eq!(res.rank_schedule, vec![1]);
        let fit = res.left.matmul(&res.right).unwrap();
        let resid = x.sub(&fit).unwrap().frobenius_norm() / x.frobenius_norm();
        assert!(resid <= 1e-9, "rank-1 fit left residual {resid:e}");
        assert!(
            res.sparse.data().iter().all(|&e| e == 0.0),
            "lambda = 0 must keep the sparse part identically zero"
        );
    }

    #[test]
    fn qr_step_product_equals_least_squares_step_product() {
        // One polish step written with QR must produce the same low-rank
        // product as the explicit pseudo-inverse alternation.
        let root = RngSeed::new(7);
        let x = gaussian_matrix(20, 15, 1.0, &root.derive("x")).unwrap();
        let s = soft_threshold(&x, 0.5).unwrap();
        let v0 = gaussian_matrix(4, 15, 1.0, &root.derive("v")).unwrap();
        let target = x.sub(&s).unwrap();

        let (q, _) = qr_thin(&target.matmul_bt(&v0).unwrap()).unwrap();
        let v_qr = q.matmul_at(&target).unwrap();
        let prod_qr = q.matmul(&v_qr).unwrap();

        let u_ls = target.matmul(&pseudo_inverse(&v0).unwrap()).unwrap();
        let v_ls = pseudo_inverse(&u_ls).unwrap().matmul(&target).unwrap();
        let prod_ls = u_ls.matmul(&v_ls).unwrap();

        let rel = prod_qr.sub(&prod_ls).unwrap().frobenius_norm() / prod_ls.frobenius_norm();
        assert!(rel <= 1e-9, "products diverged by {rel:e}");
    }

    #[test]
    fn objective_trace_never_increases() {
        let x = gaussian_matrix(25, 20, 1.0, &RngSeed::new(3).derive("x")).unwrap();
        let mut c = cfg(2, 8, 0.05, 4);
        c.inner_iters = 5;
        c.tolerance = 1e-9;
        let res = grebsmo(&x, &c).unwrap();
        assert!(res.objective_trace.len() >= 2);
        for (t, w) in res.objective_trace.windows(2).enumerate() {
            assert!(
                w[1] <= w[0] + 1e-8,
                "objective rose at inner step {t}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn exact_rank_input_stops_within_one_step_of_the_true_rank() {
        let x = low_rank(30, 25, 3, 9);
        let mut c = cfg(1, 10, 0.0, 5);
        c.tolerance = 1e-7;
        c.inner_iters = 4;
        let res = grebsmo(&x, &c).unwrap();
        assert!(res.converged);
        let final_rank = *res.rank_schedule.last().unwrap();
        assert!(
            final_rank <= 4,
            "rank-3 input should stop by rank 4, reached {final_rank}"
        );
        for w in res.rank_schedule.windows(2) {
            assert!(w[1] > w[0], "rank schedule must be strictly increasing");
        }
        let fit = res.left.matmul(&res.right).unwrap();
        assert!(rel_error(&x, &fit).unwrap() <= 1e-10);
    }

    #[test]
    fn left_factor_is_orthonormal_and_sparse_part_matches_its_prox() {
        let x = gaussian_matrix(18, 14, 1.0, &RngSeed::new(11).derive("x")).unwrap();
        let mut c = cfg(2, 6, 0.2, 6);
        c.inner_iters = 4;
        c.tolerance = 1e-9;
        let res = grebsmo(&x, &c).unwrap();
        let g = res.left.matmul_at(&res.left).unwrap();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g.get(i, j) - want).abs() < 1e-10,
                    "left factor lost orthonormality at ({i}, {j})"
                );
            }
        }
        // The sparse part is exactly the proximal update at the returned
        // factors, because it is refreshed last in every inner iteration.
        let resid = x.sub(&res.left.matmul(&res.right).unwrap()).unwrap();
        assert_eq!(res.sparse, soft_threshold(&resid, 0.2).unwrap());
    }

    #[test]
    fn dependent_directions_are_dropped_with_a_warning() {
        // Rank-1 data with an initial rank of 3: two of the three projected
        // directions collapse and must be dropped.
        let x = low_rank(16, 12, 1, 13);
        let mut c = cfg(1, 5, 0.0, 8);
        c.initial_rank = 3;
        c.tolerance = 1e-8;
        let res = grebsmo(&x, &c).unwrap();
        assert!(res.converged);
        assert!(
            !res.warnings.is_empty(),
            "dropping dependent directions should leave a warning"
        );
        assert_eq!(*res.rank_schedule.last().unwrap(), 1);
        let fit = res.left.matmul(&res.right).unwrap();
        assert!(rel_error(&x, &fit).unwrap() <= 1e-12);
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let x = gaussian_matrix(15, 12, 1.0, &RngSeed::new(17).derive("x")).unwrap();
        let mut c = cfg(2, 6, 0.1, 21);
        c.tolerance = 1e-10;
        let a = grebsmo(&x, &c).unwrap();
        let b = grebsmo(&x, &c).unwrap();
        assert_eq!(a.left, b.left);
        assert_eq!(a.right, b.right);
        assert_eq!(a.sparse, b.sparse);
        c.seed = RngSeed::new(22);
        let other = grebsmo(&x, &c).unwrap();
        assert_ne!(a.right, other.right, "a new seed should draw new directions");
    }

    #[test]
    fn max_rank_exhaustion_reports_non_convergence() {
        let x = gaussian_matrix(20, 16, 1.0, &RngSeed::new(23).derive("x")).unwrap();
        let mut c = cfg(1, 2, 0.0, 3);
        c.tolerance = 1e-12;
        let res = grebsmo(&x, &c).unwrap();
        assert!(!res.converged, "full-rank noise cannot fit at rank 2");
        assert_eq!(res.rank_schedule, vec![1, 2]);
    }

    #[test]
    fn exact_directions_match_singular_structure() {
        // Rank-1 residual: the single proposed direction is the right
        // singular vector up to sign.
        let u = gaussian_matrix(12, 1, 1.0, &RngSeed::new(2).derive("u")).unwrap();
        let vt = gaussian_matrix(1, 9, 1.0, &RngSeed::new(2).derive("v")).unwrap();
        let resid = u.matmul(&vt).unwrap();
        let d = greedy_directions(&resid, 1, DirectionMode::ExactSvd, &RngSeed::new(0)).unwrap();
        let vnorm = vt.frobenius_norm();
        let dot: f64 = (0..9).map(|j| d.get(0, j) * vt.get(0, j) / vnorm).sum();
        assert!(
            (dot.abs() - 1.0).abs() <= 1e-9,
            "direction misaligned with the singular vector: |dot| = {}",
            dot.abs()
        );

        // Graded diagonal: two directions span the two leading axes.
        let diag = DenseMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                [5.0, 3.0, 1.0][i]
            } else {
                0.0
            }
        })
        .unwrap();
        let d2 = greedy_directions(&diag, 2, DirectionMode::ExactSvd, &RngSeed::new(0)).unwrap();
        for i in 0..2 {
            assert!(
                d2.get(i, 2).abs() <= 1e-8,
                "direction {i} leaked onto the trailing axis"
            );
        }
    }

    #[test]
    fn random_directions_are_orthonormal_and_capture_energy() {
        let resid = gaussian_matrix(50, 40, 1.0, &RngSeed::new(31).derive("r")).unwrap();
        let mut captured_ok = 0;
        for s in 0..30u64 {
            let d = greedy_directions(
                &resid,
                3,
                DirectionMode::RandomProjection,
                &RngSeed::new(s),
            )
            .unwrap();
            let g = d.matmul_bt(&d).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g.get(i, j) - want).abs() < 1e-10,
                        "seed {s}: rows not orthonormal at ({i}, {j})"
                    );
                }
            }
            let captured = resid.matmul_bt(&d).unwrap().frobenius_norm_sq()
                / resid.frobenius_norm_sq();
            if captured >= 0.10 {
                captured_ok += 1;
            }
        }
        assert!(
            captured_ok >= 27,
            "sketch directions captured enough energy in only {captured_ok}/30 seeds"
        );
    }

    #[test]
    fn direction_count_bounds_are_enforced() {
        let resid = DenseMatrix::zeros(5, 4).unwrap();
        assert!(greedy_directions(&resid, 0, DirectionMode::ExactSvd, &RngSeed::new(0)).is_err());
        assert!(greedy_directions(&resid, 5, DirectionMode::ExactSvd, &RngSeed::new(0)).is_err());
        assert!(
            greedy_directions(&resid, 4, DirectionMode::RandomProjection, &RngSeed::new(0))
                .is_ok()
        );
    }

    #[test]
    fn parameter_violations_are_rejected() {
        let x = DenseMatrix::zeros(8, 6).unwrap();
        let good = cfg(1, 4, 0.1, 0);
        assert!(grebsmo(&x, &GrebConfig { rank_step: 0, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { inner_iters: 0, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { initial_rank: 0, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { initial_rank: 5, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { max_rank: 7, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { tolerance: 0.0, ..good.clone() }).is_err());
        assert!(grebsmo(&x, &GrebConfig { lambda: -0.5, ..good.clone() }).is_err());
    }

    #[test]
    fn zero_input_returns_a_trivial_converged_result() {
        let x = DenseMatrix::zeros(7, 5).unwrap();
        let res = grebsmo(&x, &cfg(1, 3, 0.1, 0)).unwrap();
        assert!(res.converged);
        assert!(res.sparse.data().iter().all(|&e| e == 0.0));
        assert!(res.right.data().iter().all(|&e| e == 0.0));
    }
}
