//! Singular value decomposition via one-sided Jacobi rotations, plus the
//! truncation, spectral-norm and pseudo-inverse helpers built on it.

use crate::matrix::{dot, DenseMatrix, MatError};

/// Relative off-diagonal tolerance at which a column pair counts as orthogonal.
const JACOBI_TOL: f64 = 1e-12;
/// Hard cap on full Jacobi sweeps; random matrices settle in well under 20.
const MAX_SWEEPS: usize = 60;

/// Full thin SVD: `a = u * diag(sigma) * v^T` with `u` of size `m x k`,
/// `v` of size `n x k`, `k = min(m, n)`, and `sigma` nonnegative descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Computes the thin SVD of any dense matrix.
///
/// Wide matrices are handled by factoring the transpose and swapping the
/// singular-vector factors. Columns whose singular value underflows relative
/// to the largest are completed to an orthonormal basis, so `u` and `v`
/// always have orthonormal columns even for rank-deficient input.
pub fn svd_full(a: &DenseMatrix) -> Result<SvdFactors, MatError> {
    if a.rows() < a.cols() {
        let f = jacobi_tall(&a.transpose())?;
        return Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        });
    }
    jacobi_tall(a)
}

fn jacobi_tall(a: &DenseMatrix) -> Result<SvdFactors, MatError> {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    // Column-major buffers: rotations touch whole columns.
    let mut w = vec![0.0f64; m * n];
    for i in 0..m {
        for j in 0..n {
            w[j * m + i] = a.get(i, j);
        }
    }
    let mut v = vec![0.0f64; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                // Dots are recomputed per pair; no cache can go stale.
                let (app, aqq, apq) = {
                    let cp = &w[p * m..(p + 1) * m];
                    let cq = &w[q * m..(q + 1) * m];
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if apq.abs() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, m, p, q, c, s);
                rotate_pair(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| {
            let col = &w[j * m..(j + 1) * m];
            dot(col, col).sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));
    sigma = order.iter().map(|&j| sigma[j]).collect();

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let tiny = sigma_max * f64::EPSILON;

    let mut u = vec![0.0f64; m * n];
    let mut pending: Vec<usize> = Vec::new();
    for (slot, &src) in order.iter().enumerate() {
        let s = sigma[slot];
        if s > tiny && s > 0.0 {
            let col = &w[src * m..(src + 1) * m];
            let dst = &mut u[slot * m..(slot + 1) * m];
            let inv = 1.0 / s;
            for (d, &x) in dst.iter_mut().zip(col) {
                *d = x * inv;
            }
        } else {
            pending.push(slot);
        }
    }
    let filled: Vec<usize> = (0..n).filter(|slot| !pending.contains(slot)).collect();
    let mut have: Vec<usize> = filled;
    for slot in pending {
        complete_orthonormal_column(&mut u, m, slot, &have);
        have.push(slot);
    }

    let umat = DenseMatrix::from_fn(m, n, |i, j| u[j * m + i])?;
    let vmat = DenseMatrix::from_fn(n, n, |i, j| v[order[j] * n + i])?;
    Ok(SvdFactors {
        u: umat,
        sigma,
        v: vmat,
    })
}

/// Applies the rotation `[cp, cq] <- [c*cp - s*cq, s*cp + c*cq]` to columns
/// `p` and `q` of a column-major buffer with column length `len`.
fn rotate_pair(buf: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = buf.split_at_mut(hi * len);
    let cp = &mut head[lo * len..(lo + 1) * len];
    let cq = &mut tail[..len];
    let (a, b) = if p < q { (cp, cq) } else { (cq, cp) };
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills column `slot` of the column-major buffer with a unit vector
/// orthogonal to the columns listed in `have`, chosen as the standard basis
/// vector with the largest residual after projection.
fn complete_orthonormal_column(u: &mut [f64], m: usize, slot: usize, have: &[usize]) {
    let mut best_i = 0;
    let mut best_res = -1.0;
    for i in 0..m {
        let mut res = 1.0;
        for &c in have {
            let uc = u[c * m + i];
            res -= uc * uc;
        }
        if res > best_res {
            best_res = res;
            best_i = i;
        }
    }
    let mut vec_new = vec![0.0f64; m];
    vec_new[best_i] = 1.0;
    // Two Gram-Schmidt passes keep orthogonality at machine precision.
    for _ in 0..2 {
        for &c in have {
            let col = &u[c * m..(c + 1) * m];
            let proj = dot(&vec_new, col);
            for (x, &y) in vec_new.iter_mut().zip(col) {
                *x -= proj * y;
            }
        }
    }
    let norm = dot(&vec_new, &vec_new).sqrt();
    let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
    for (d, x) in u[slot * m..(slot + 1) * m].iter_mut().zip(vec_new) {
        *d = x * inv;
    }
}

/// Best approximation of `a` with rank at most `rank` (Eckart-Young optimum),
/// reconstructed from the leading singular triplets. `rank` is clamped to
/// `min(m, n)`; zero rank is rejected.
pub fn svd_truncate(a: &DenseMatrix, rank: usize) -> Result<DenseMatrix, MatError> {
    if rank == 0 {
        return Err(MatError::InvalidParameter {
            name: "rank",
            why: "truncation rank must be at least 1".to_string(),
        });
    }
    let f = svd_full(a)?;
    let r = rank.min(f.sigma.len());
    let scaled = DenseMatrix::from_fn(a.rows(), r, |i, j| f.u.get(i, j) * f.sigma[j])?;
    let vr = DenseMatrix::from_fn(a.cols(), r, |i, j| f.v.get(i, j))?;
    scaled.matmul_bt(&vr)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64, MatError> {
    Ok(svd_full(a)?.sigma.first().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudo-inverse. Singular values at or below `1e-12` times
/// the largest are treated as zero.
pub fn pseudo_inverse(a: &DenseMatrix) -> Result<DenseMatrix, MatError> {
    let f = svd_full(a)?;
    let cutoff = f.sigma.first().copied().unwrap_or(0.0) * 1e-12;
    let k = f.sigma.len();
    let scaled_v = DenseMatrix::from_fn(a.cols(), k, |i, j| {
        if f.sigma[j] > cutoff {
            f.v.get(i, j) / f.sigma[j]
        } else {
            0.0
        }
    })?;
    scaled_v.matmul_bt(&f.u)
}

/// Number of singular values above `rel_cutoff` times the largest.
pub(crate) fn effective_rank(sigma: &[f64], rel_cutoff: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_cutoff * top).count()
}
