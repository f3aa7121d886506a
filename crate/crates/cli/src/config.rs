//! Config-file parsing and flag/file resolution.
//!
//! Every subcommand accepts `--config <file>`, a flat TOML file whose keys
//! are the subcommand's long flag names with `-` replaced by `_` (the input
//! path key is literally `in`). Values given on the command line win over
//! values from the file; hard defaults fill whatever is left. Unknown keys
//! are rejected so a typo cannot silently fall back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;
use crate::io::MatrixFormat;

/// Decomposition engine selection for `decompose`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Alternation with exact truncated SVDs.
    Godec,
    /// Alternation with bilateral random projections.
    GodecBrp,
    /// Greedy rank-incremental factorization with a soft-thresholded
    /// sparse part.
    Grebsmo,
}

/// Low-rank approximation method for `lowrank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowrankMethod {
    Brp,
    Svd,
}

/// Direction proposals for the greedy engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Exact,
    Random,
}

/// Synthetic-instance generator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Godec,
    Phase,
    Lingodec,
}

/// Solver measured by the `phase` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Godec,
    Grebsmo,
    Lingodec,
}

/// Reads a TOML config file into the per-command option struct; `None`
/// yields the all-absent default so resolution code has one path.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeFile {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub in_format: Option<MatrixFormat>,
    pub frames_dir: Option<PathBuf>,
    pub transpose: Option<bool>,
    pub engine: Option<Engine>,
    pub rank: Option<usize>,
    pub card: Option<usize>,
    pub q: Option<usize>,
    pub eps: Option<f64>,
    pub max_iters: Option<usize>,
    pub rank_step: Option<usize>,
    pub initial_rank: Option<usize>,
    pub max_rank: Option<usize>,
    pub lambda: Option<f64>,
    pub inner_iters: Option<usize>,
    pub tol: Option<f64>,
    pub direction: Option<Direction>,
    pub truth_l: Option<PathBuf>,
    pub truth_s: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowrankFile {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub in_format: Option<MatrixFormat>,
    pub method: Option<LowrankMethod>,
    pub rank: Option<usize>,
    pub q: Option<usize>,
    pub oversample: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LingodecFile {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub in_format: Option<MatrixFormat>,
    pub features: Option<PathBuf>,
    pub features_format: Option<MatrixFormat>,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub brp: Option<bool>,
    pub truth_w: Option<PathBuf>,
    pub truth_s: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub generator: Option<Generator>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub rank: Option<usize>,
    pub card: Option<usize>,
    pub sigma: Option<f64>,
    pub rank_ratio: Option<f64>,
    pub rho: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    pub solver: Option<Solver>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub grid: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoDemoFile {
    pub frames: Option<usize>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
    pub seed: Option<u64>,
}
