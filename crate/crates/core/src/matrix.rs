//! Dense row-major `f64` matrices and the arithmetic the solvers rely on.
//!
//! Every construction and every operation validates that all entries are
//! finite; a NaN or infinity is surfaced as [`MatError::NonFinite`] instead of
//! propagating silently through a decomposition.

use thiserror::Error;

/// Errors from matrix construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("{op}: dimension mismatch, left is {lrows}x{lcols}, right is {rrows}x{rcols}")]
    DimensionMismatch {
        op: &'static str,
        lrows: usize,
        lcols: usize,
        rrows: usize,
        rcols: usize,
    },
    #[error("invalid dimensions {rows}x{cols}: {what}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        what: &'static str,
    },
    #[error("data length {got} does not match {rows}x{cols} = {want}")]
    DataLength {
        rows: usize,
        cols: usize,
        got: usize,
        want: usize,
    },
    #[error("{op}: non-finite value at ({row}, {col})")]
    NonFinite {
        op: &'static str,
        row: usize,
        col: usize,
    },
    #[error("invalid parameter {name}: {why}")]
    InvalidParameter { name: &'static str, why: String },
}

/// Dense matrix with row-major storage. Dimensions are at least 1x1 and all
/// entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix. Errors when either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, MatError> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Result<Self, MatError> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(MatError::DataLength {
                rows,
                cols,
                got: data.len(),
                want: rows * cols,
            });
        }
        let m = Self { rows, cols, data };
        m.ensure_finite("from_vec")?;
        Ok(m)
    }

    /// Builds a matrix entry by entry from `f(row, col)`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Result<Self, MatError> {
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major view of all entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Entry at `(i, j)`. Panics when out of bounds.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    /// Overwrites the entry at `(i, j)`. Panics when out of bounds or when
    /// `value` is not finite.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        assert!(value.is_finite(), "refusing to store non-finite value at ({i}, {j})");
        self.data[i * self.cols + j] = value;
    }

    /// Contiguous view of row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row {i} out of bounds");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            let src = self.row(i);
            for (j, &v) in src.iter().enumerate() {
                out[j * self.rows + i] = v;
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    /// Elementwise sum.
    pub fn add(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    /// Elementwise difference `self - rhs`.
    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&self, factor: f64) -> Result<DenseMatrix, MatError> {
        if !factor.is_finite() {
            return Err(MatError::InvalidParameter {
                name: "factor",
                why: format!("must be finite, got {factor}"),
            });
        }
        let m = DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        };
        m.ensure_finite("scale")?;
        Ok(m)
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        if self.cols != rhs.rows {
            return Err(self.mismatch("matmul", rhs));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for (i, out_row) in out.chunks_mut(rhs.cols).enumerate() {
            let a_row = self.row(i);
            for (l, &a_il) in a_row.iter().enumerate() {
                if a_il != 0.0 {
                    axpy(a_il, rhs.row(l), out_row);
                }
            }
        }
        let m = DenseMatrix {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        };
        m.ensure_finite("matmul")?;
        Ok(m)
    }

    /// Product with the left factor transposed: `self^T * rhs`.
    pub fn matmul_at(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        if self.rows != rhs.rows {
            return Err(self.mismatch("matmul_at", rhs));
        }
        let mut out = vec![0.0; self.cols * rhs.cols];
        for l in 0..self.rows {
            let a_row = self.row(l);
            let b_row = rhs.row(l);
            for (i, &a_li) in a_row.iter().enumerate() {
                if a_li != 0.0 {
                    axpy(a_li, b_row, &mut out[i * rhs.cols..(i + 1) * rhs.cols]);
                }
            }
        }
        let m = DenseMatrix {
            rows: self.cols,
            cols: rhs.cols,
            data: out,
        };
        m.ensure_finite("matmul_at")?;
        Ok(m)
    }

    /// Product with the right factor transposed: `self * rhs^T`.
    pub fn matmul_bt(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        if self.cols != rhs.cols {
            return Err(self.mismatch("matmul_bt", rhs));
        }
        let mut out = vec![0.0; self.rows * rhs.rows];
        for (i, out_row) in out.chunks_mut(rhs.rows).enumerate() {
            let a_row = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, rhs.row(j));
            }
        }
        let m = DenseMatrix {
            rows: self.rows,
            cols: rhs.rows,
            data: out,
        };
        m.ensure_finite("matmul_bt")?;
        Ok(m)
    }

    /// Squared Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of nonzero entries.
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    fn zip_with<F: Fn(f64, f64) -> f64>(
        &self,
        rhs: &DenseMatrix,
        op: &'static str,
        f: F,
    ) -> Result<DenseMatrix, MatError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(self.mismatch(op, rhs));
        }
        let m = DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        };
        m.ensure_finite(op)?;
        Ok(m)
    }

    fn mismatch(&self, op: &'static str, rhs: &DenseMatrix) -> MatError {
        MatError::DimensionMismatch {
            op,
            lrows: self.rows,
            lcols: self.cols,
            rrows: rhs.rows,
            rcols: rhs.cols,
        }
    }

    pub(crate) fn ensure_finite(&self, op: &'static str) -> Result<(), MatError> {
        for (k, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatError::NonFinite {
                    op,
                    row: k / self.cols,
                    col: k % self.cols,
                });
            }
        }
        Ok(())
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<(), MatError> {
    if rows == 0 || cols == 0 {
        return Err(MatError::InvalidDimensions {
            rows,
            cols,
            what: "both dimensions must be at least 1",
        });
    }
    Ok(())
}

/// Dot product with a fixed 8-lane accumulation order, so results are
/// identical across runs and platforms.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (xa, xb) in ca.by_ref().zip(cb.by_ref()) {
        for k in 0..8 {
            acc[k] += xa[k] * xb[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `out += c * b`, elementwise.
#[inline]
pub(crate) fn axpy(c: f64, b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(b.len(), out.len());
    for (o, &x) in out.iter_mut().zip(b) {
        *o += c * x;
    }
}
