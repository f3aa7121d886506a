//! Thin QR factorization via Householder reflections.

use crate::matrix::{DenseMatrix, MatError};

/// Thin QR of an `m x n` matrix with `m >= n`: returns `(Q, R)` where `Q` is
/// `m x n` with orthonormal columns, `R` is `n x n` upper triangular with a
/// nonnegative diagonal, and `Q * R` reconstructs the input.
///
/// Inputs that are already upper triangular with a nonnegative diagonal are
/// passed through unchanged (`Q` is the leading columns of the identity and
/// `R` is the top block, bit for bit). In particular the identity matrix
/// factors as exactly itself.
pub fn qr_thin(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix), MatError> {
    let m = a.rows();
    let n = a.cols();
    if m < n {
        return Err(MatError::InvalidParameter {
            name: "rows",
            why: format!("thin QR needs rows >= cols, got {m} x {n}"),
        });
    }

    if is_upper_triangular_nonneg(a) {
        let q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 })?;
        let r = DenseMatrix::from_fn(n, n, |i, j| a.get(i, j))?;
        return Ok((q, r));
    }

    // Column-major working copy: Householder updates sweep down columns.
    let mut w = vec![0.0f64; m * n];
    for i in 0..m {
        for j in 0..n {
            w[j * m + i] = a.get(i, j);
        }
    }

    // Reflector k is stored as (beta, v) acting on rows k..m.
    let mut reflectors: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let (head, rest) = w.split_at_mut((k + 1) * m);
        let col = &mut head[k * m + k..(k + 1) * m];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push((0.0, Vec::new()));
            continue;
        }
        let alpha = if col[0] >= 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vtv = v.iter().map(|x| x * x).sum::<f64>();
        let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
        col[0] = alpha;
        for x in col.iter_mut().skip(1) {
            *x = 0.0;
        }
        if beta != 0.0 {
            for j in k + 1..n {
                let tail = &mut rest[(j - k - 1) * m + k..(j - k) * m];
                let dot: f64 = v.iter().zip(tail.iter()).map(|(x, y)| x * y).sum();
                let c = beta * dot;
                for (t, x) in tail.iter_mut().zip(v.iter()) {
                    *t -= c * x;
                }
            }
        }
        reflectors.push((beta, v));
    }

    let mut r = DenseMatrix::zeros(n, n)?;
    for j in 0..n {
        for i in 0..=j {
            r.set(i, j, w[j * m + i]);
        }
    }

    // Back-accumulate Q = H_0 ... H_{n-1} * (first n columns of I).
    let mut q = vec![0.0f64; m * n];
    for j in 0..n {
        q[j * m + j] = 1.0;
    }
    for k in (0..n).rev() {
        let (beta, v) = &reflectors[k];
        if *beta == 0.0 {
            continue;
        }
        for j in 0..n {
            let col = &mut q[j * m + k..(j + 1) * m];
            let dot: f64 = v.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
            let c = beta * dot;
            for (t, x) in col.iter_mut().zip(v.iter()) {
                *t -= c * x;
            }
        }
    }

    // Flip signs so the diagonal of R is nonnegative; Q*R is unchanged.
    for k in 0..n {
        if r.get(k, k) < 0.0 {
            for j in k..n {
                let val = r.get(k, j);
                r.set(k, j, -val);
            }
            for i in 0..m {
                q[k * m + i] = -q[k * m + i];
            }
        }
    }

    let qmat = DenseMatrix::from_fn(m, n, |i, j| q[j * m + i])?;
    Ok((qmat, r))
}

fn is_upper_triangular_nonneg(a: &DenseMatrix) -> bool {
    let n = a.cols();
    for i in 0..a.rows() {
        for j in 0..n.min(i) {
            if a.get(i, j) != 0.0 {
                return false;
            }
        }
        if i < n && a.get(i, i) < 0.0 {
            return false;
        }
    }
    true
}

/// Solves `R * x = y` for upper-triangular `R` by back substitution.
/// Returns `None` when a diagonal entry is too small relative to the largest,
/// in which case the caller should fall back to a least-squares solve.
pub(crate) fn solve_upper_triangular(r: &DenseMatrix, y: &[f64]) -> Option<Vec<f64>> {
    let n = r.rows();
    debug_assert_eq!(r.cols(), n);
    debug_assert_eq!(y.len(), n);
    let dmax = (0..n).map(|i| r.get(i, i).abs()).fold(0.0f64, f64::max);
    let cutoff = dmax * 1e-12;
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let d = r.get(i, i);
        if d.abs() <= cutoff {
            return None;
        }
        let mut s = y[i];
        for j in i + 1..n {
            s -= r.get(i, j) * x[j];
        }
        x[i] = s / d;
    }
    Some(x)
}
