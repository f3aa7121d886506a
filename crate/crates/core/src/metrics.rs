//! Error metrics shared by the solvers, the experiment lab and the CLI.

use crate::matrix::{DenseMatrix, MatError};

/// Squared relative Frobenius error `|ref - est|_F^2 / |ref|_F^2`.
///
/// The squared convention is used everywhere in this crate, including
/// recovery-success thresholds. A zero reference yields `0.0` when the
/// estimate is also zero and `+inf` otherwise.
pub fn rel_error(reference: &DenseMatrix, estimate: &DenseMatrix) -> Result<f64, MatError> {
    if reference.rows() != estimate.rows() || reference.cols() != estimate.cols() {
        return Err(MatError::DimensionMismatch {
            op: "rel_error",
            lrows: reference.rows(),
            lcols: reference.cols(),
            rrows: estimate.rows(),
            rcols: estimate.cols(),
        });
    }
    let denom = reference.frobenius_norm_sq();
    let num = reference.sub(estimate)?.frobenius_norm_sq();
    if denom == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / denom)
}
