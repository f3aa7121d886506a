//! Entrywise sparsification operators: hard thresholding by cardinality and
//! soft thresholding by magnitude.

use crate::matrix::{DenseMatrix, MatError};

/// Keeps the `k` entries of largest magnitude and zeroes the rest.
///
/// Ties are broken deterministically: larger magnitude first, then smaller
/// row-major index. `k = 0` returns the zero matrix; `k` at or above the
/// entry count returns an identical copy.
pub fn hard_threshold_entries(x: &DenseMatrix, k: usize) -> DenseMatrix {
    let len = x.data().len();
    if k >= len {
        return x.clone();
    }
    let mut out = DenseMatrix::zeros(x.rows(), x.cols()).expect("input dims are valid");
    if k == 0 {
        return out;
    }
    let data = x.data();
    let mut idx: Vec<usize> = (0..len).collect();
    idx.select_nth_unstable_by(k - 1, |&i, &j| {
        data[j]
            .abs()
            .partial_cmp(&data[i].abs())
            .expect("matrix entries are finite")
            .then(i.cmp(&j))
    });
    let out_data = out.data_mut();
    for &i in &idx[..k] {
        out_data[i] = data[i];
    }
    out
}

/// Entrywise shrinkage `sign(x) * max(|x| - lambda, 0)`.
///
/// This is the exact minimizer of `|r - s|^2 + 2*lambda*|s|` per entry, so a
/// soft-threshold block update with weight `lambda` pairs with an l1 penalty
/// of `2*lambda` in any tracked objective.
pub fn soft_threshold(x: &DenseMatrix, lambda: f64) -> Result<DenseMatrix, MatError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(MatError::InvalidParameter {
            name: "lambda",
            why: format!("shrinkage weight must be finite and nonnegative, got {lambda}"),
        });
    }
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        let v = x.get(i, j);
        let mag = v.abs() - lambda;
        if mag > 0.0 {
            v.signum() * mag
        } else {
            0.0
        }
    })
}
