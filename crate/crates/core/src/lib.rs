//! Decomposition of dense real matrices into low-rank + sparse + noise parts.
//!
//! The core pipeline approximates a matrix `X` as `L + S + G` where `L` has low
//! rank, `S` has few nonzero entries and `G` is what remains. Three solver
//! families are provided:
//!
//! * [`godec`](mod@godec) — alternating rank projection and entrywise hard
//!   thresholding, either with exact truncated SVDs or with bilateral random
//!   projections,
//! * [`grebsmo`](mod@grebsmo) — greedy rank-incremental factorization with
//!   soft-thresholded sparse residuals,
//! * [`lingodec`](mod@lingodec) — low-rank weight recovery against a known
//!   feature matrix.
//!
//! Supporting modules: dense kernels ([`matrix`], [`qr`], [`svd`],
//! [`threshold`], [`metrics`]), a deterministic counter-based RNG ([`rng`]),
//! randomized approximation with error certificates ([`brp`]) and synthetic
//! experiment generators ([`synthlab`]).

pub mod brp;
pub mod godec;
pub mod grebsmo;
pub mod lingodec;
pub mod matrix;
pub mod metrics;
pub mod qr;
pub mod rng;
pub mod svd;
pub mod synthlab;
pub mod threshold;

pub use brp::{
    average_bound_rhs, bound_report, brp_approx, brp_approx_seeded, brp_power, brp_power_seeded,
    deterministic_bound_rhs, deviation_bound_rhs, BoundReport, BrpConfig, BrpError, BrpResult,
    DeviationBound,
};
pub use godec::{godec, godec_brp, godec_naive, DecompResult, GodecConfig, GodecEngine, GodecError};
pub use grebsmo::{greedy_directions, grebsmo, DirectionMode, FactoredResult, GrebConfig, GrebError};
pub use lingodec::{lingodec, predict_scores, LinGodecConfig, LinGodecError, LinGodecResult};
pub use matrix::{DenseMatrix, MatError};
pub use metrics::rel_error;
pub use qr::qr_thin;
pub use rng::{gaussian_matrix, GaussianStream, RngSeed};
pub use svd::{pseudo_inverse, spectral_norm, svd_full, svd_truncate, SvdFactors};
pub use synthlab::{
    default_phase_grid, gen_godec_instance, gen_lingodec_instance, gen_phase_instance, phase_csv,
    run_phase_diagram, PhaseCell, PhaseSolver, SynthError, SynthInstance, SynthMeta,
};
pub use threshold::{hard_threshold_entries, soft_threshold};
