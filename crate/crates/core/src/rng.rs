//! Deterministic random number generation with labeled substreams.
//!
//! Every random draw in this crate flows through [`RngSeed`]: a root seed plus
//! a path of text labels. The same (seed, path) always produces the same
//! stream, on every platform, regardless of which other streams were drawn
//! first. That makes experiments reproducible entry by entry.

use crate::matrix::{DenseMatrix, MatError};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// Root seed plus a label path identifying one substream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngSeed {
    seed: u64,
    path: String,
}

impl RngSeed {
    /// Substream at the root of `seed`.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: String::new(),
        }
    }

    /// Child substream. Labels chain: `seed.derive("a").derive("b")` is the
    /// `"a/b"` stream, distinct from `"a"`, `"b"` and `"ab"`.
    pub fn derive(&self, label: &str) -> Self {
        let mut path = String::with_capacity(self.path.len() + label.len() + 1);
        path.push_str(&self.path);
        path.push('/');
        path.push_str(label);
        Self {
            seed: self.seed,
            path,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    /// Opens the stream for this (seed, path).
    pub fn stream(&self) -> GaussianStream {
        let mut h = FNV_OFFSET;
        for b in self.seed.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
        for b in self.path.as_bytes() {
            h = (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME);
        }
        GaussianStream {
            state: h,
            spare: None,
        }
    }
}

/// Counter-based stream yielding uniforms and standard Gaussians.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    state: u64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(SPLITMIX_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval (0, 1).
    pub fn next_unit_open(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `[0, bound)` without modulo bias.
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        let bound = bound as u64;
        let max_valid = (u64::MAX / bound) * bound;
        loop {
            let x = self.next_u64();
            if x < max_valid {
                return (x % bound) as usize;
            }
        }
    }

    /// Standard normal draw via the Box-Muller transform; pairs are cached so
    /// consecutive draws consume one uniform pair per two samples.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_unit_open();
        let u2 = self.next_unit_open();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(radius * theta.sin());
        radius * theta.cos()
    }
}

/// Matrix with independent `N(0, scale^2)` entries in row-major draw order.
pub fn gaussian_matrix(
    rows: usize,
    cols: usize,
    scale: f64,
    seed: &RngSeed,
) -> Result<DenseMatrix, MatError> {
    if !scale.is_finite() || scale < 0.0 {
        return Err(MatError::InvalidParameter {
            name: "scale",
            why: format!("must be finite and nonnegative, got {scale}"),
        });
    }
    let mut stream = seed.stream();
    DenseMatrix::from_fn(rows, cols, |_, _| scale * stream.next_gaussian())
}
