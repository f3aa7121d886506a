//! One function per subcommand, operating on fully resolved parameters.
//!
//! Each function loads its inputs, runs the solver, writes every artifact
//! atomically into the output directory and returns whether the run counts
//! as fully successful. `Ok(false)` means the solver finished without
//! reaching its tolerance: the artifacts are still on disk and the process
//! exits with code 1. Errors (exit code 2) are raised before any solver
//! work whenever possible.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use unmix::rng::RngSeed;
use unmix::{
    brp_approx, brp_power, godec, grebsmo, lingodec, rel_error, svd_full, BrpConfig, DenseMatrix,
    GodecConfig, GodecEngine, GrebConfig, LinGodecConfig, PhaseSolver,
};

use crate::config::{Direction, Engine, Generator, LowrankMethod, Solver};
use crate::error::CliError;
use crate::io::{load_frames, load_matrix, save_matrix, save_pgm, write_atomic, MatrixFormat};
use crate::metrics::{write_metrics, MetricsReport};
use crate::video::{jaccard, render_frame, truth_support, VideoSpec, SQUARE_SIDE};

/// Where `decompose` reads its matrix from.
pub enum InputSource {
    Matrix { path: PathBuf, format: MatrixFormat },
    Frames { dir: PathBuf, transpose: bool },
}

impl InputSource {
    fn load(&self) -> Result<DenseMatrix, CliError> {
        match self {
            InputSource::Matrix { path, format } => load_matrix(path, *format),
            InputSource::Frames { dir, transpose } => {
                let (frames, _, _) = load_frames(dir)?;
                Ok(if *transpose { frames.transpose() } else { frames })
            }
        }
    }
}

pub struct DecomposeParams {
    pub input: InputSource,
    pub engine: Engine,
    pub rank: Option<usize>,
    pub card: Option<usize>,
    pub q: usize,
    pub eps: f64,
    pub max_iters: usize,
    pub rank_step: usize,
    pub initial_rank: Option<usize>,
    pub max_rank: Option<usize>,
    pub lambda: Option<f64>,
    pub inner_iters: usize,
    pub tol: f64,
    pub direction: Direction,
    pub truth_l: Option<PathBuf>,
    pub truth_s: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub format: MatrixFormat,
    pub seed: u64,
}

pub struct LowrankParams {
    pub input: PathBuf,
    pub in_format: MatrixFormat,
    pub method: LowrankMethod,
    pub rank: usize,
    pub q: usize,
    pub oversample: usize,
    pub out_dir: PathBuf,
    pub format: MatrixFormat,
    pub seed: u64,
}

pub struct LingodecParams {
    pub input: PathBuf,
    pub in_format: MatrixFormat,
    pub features: PathBuf,
    pub features_format: MatrixFormat,
    pub rank: usize,
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub brp: bool,
    pub truth_w: Option<PathBuf>,
    pub truth_s: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub format: MatrixFormat,
    pub seed: u64,
}

pub struct SynthParams {
    pub generator: Generator,
    pub n: usize,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub rank: Option<usize>,
    pub card: Option<usize>,
    pub sigma: f64,
    pub rank_ratio: Option<f64>,
    pub rho: Option<f64>,
    pub out_dir: PathBuf,
    pub format: MatrixFormat,
    pub seed: u64,
}

pub struct PhaseParams {
    pub solver: Solver,
    pub n: usize,
    pub trials: usize,
    pub grid: String,
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub struct VideoDemoParams {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub out_dir: PathBuf,
    pub format: MatrixFormat,
    pub seed: u64,
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn artifact(dir: &Path, stem: &str, format: MatrixFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// Numerical rank with the reporting cutoff used across the toolkit:
/// singular values above `1e-10` times the largest.
fn usable_rank(m: &DenseMatrix) -> Result<usize, CliError> {
    let sigma = svd_full(m)?.sigma;
    let cutoff = sigma.first().copied().unwrap_or(0.0) * 1e-10;
    Ok(sigma.iter().filter(|&&s| s > cutoff).count())
}

/// Squared relative error against an optional ground-truth file; infinite
/// ratios (zero reference, nonzero estimate) are reported as absent.
fn truth_error(
    truth: Option<&PathBuf>,
    estimate: &DenseMatrix,
) -> Result<Option<f64>, CliError> {
    let Some(path) = truth else {
        return Ok(None);
    };
    let reference = load_matrix(path, MatrixFormat::infer(path)?)?;
    if reference.rows() != estimate.rows() || reference.cols() != estimate.cols() {
        return Err(CliError::Config(format!(
            "{}: ground truth is {} x {}, estimate is {} x {}",
            path.display(),
            reference.rows(),
            reference.cols(),
            estimate.rows(),
            estimate.cols()
        )));
    }
    let ratio = rel_error(&reference, estimate)?;
    Ok(ratio.is_finite().then_some(ratio))
}

fn finite_or_none(ratio: f64) -> Option<f64> {
    ratio.is_finite().then_some(ratio)
}

pub fn run_decompose(params: &DecomposeParams) -> Result<bool, CliError> {
    let started = Instant::now();
    ensure_out_dir(&params.out_dir)?;
    let x = params.input.load()?;
    let seed = RngSeed::new(params.seed);

    let (low_rank, sparse, iterations, converged, effective_rank) = match params.engine {
        Engine::Godec | Engine::GodecBrp => {
            let rank = params
                .rank
                .ok_or_else(|| CliError::Config("godec engines need --rank".into()))?;
            let card = params
                .card
                .ok_or_else(|| CliError::Config("godec engines need --card".into()))?;
            let cfg = GodecConfig {
                rank,
                cardinality: card,
                tolerance: params.eps,
                power: params.q,
                max_iters: params.max_iters,
                seed,
                engine: match params.engine {
                    Engine::Godec => GodecEngine::Naive,
                    _ => GodecEngine::Brp,
                },
            };
            let res = godec(&x, &cfg)?;
            (res.low_rank, res.sparse, res.iterations, res.converged, res.effective_rank)
        }
        Engine::Grebsmo => {
            let max_rank = params.max_rank.unwrap_or_else(|| x.rows().min(x.cols()));
            let lambda = params
                .lambda
                .unwrap_or_else(|| GrebConfig::default_lambda(x.rows(), x.cols()));
            let cfg = GrebConfig {
                rank_step: params.rank_step,
                initial_rank: params.initial_rank.unwrap_or(params.rank_step),
                max_rank,
                inner_iters: params.inner_iters,
                lambda,
                tolerance: params.tol,
                direction_mode: match params.direction {
                    Direction::Exact => unmix::DirectionMode::ExactSvd,
                    Direction::Random => unmix::DirectionMode::RandomProjection,
                },
                seed,
            };
            let res = grebsmo(&x, &cfg)?;
            for warning in &res.warnings {
                eprintln!("warning: {warning}");
            }
            let low_rank = res.left.matmul(&res.right)?;
            // The left factor has orthonormal columns, so the product's
            // singular values are the right factor's.
            let effective = usable_rank(&res.right)?;
            (low_rank, res.sparse, res.objective_trace.len(), res.converged, effective)
        }
    };

    let recomposed = low_rank.add(&sparse)?;
    let report = MetricsReport {
        rel_error_x: finite_or_none(rel_error(&x, &recomposed)?),
        rel_error_l: truth_error(params.truth_l.as_ref(), &low_rank)?,
        rel_error_s: truth_error(params.truth_s.as_ref(), &sparse)?,
        iterations: Some(iterations),
        wall_seconds: started.elapsed().as_secs_f64(),
        effective_rank: Some(effective_rank),
        converged,
    };
    save_matrix(&artifact(&params.out_dir, "L", params.format), &low_rank, params.format)?;
    save_matrix(&artifact(&params.out_dir, "S", params.format), &sparse, params.format)?;
    write_metrics(&params.out_dir.join("metrics.json"), &report)?;
    Ok(converged)
}

pub fn run_lowrank(params: &LowrankParams) -> Result<bool, CliError> {
    let started = Instant::now();
    ensure_out_dir(&params.out_dir)?;
    let x = load_matrix(&params.input, params.in_format)?;
    let (approx, effective_rank) = match params.method {
        LowrankMethod::Svd => {
            let f = svd_full(&x)?;
            if params.rank == 0 || params.rank > f.sigma.len() {
                return Err(CliError::Config(format!(
                    "rank must be in 1..={} for this input, got {}",
                    f.sigma.len(),
                    params.rank
                )));
            }
            let cutoff = f.sigma[0] * 1e-10;
            let kept = f.sigma[..params.rank].iter().filter(|&&s| s > cutoff).count();
            let scaled = DenseMatrix::from_fn(x.rows(), params.rank, |i, j| {
                f.u.get(i, j) * f.sigma[j]
            })?;
            let right = DenseMatrix::from_fn(params.rank, x.cols(), |i, j| f.v.get(j, i))?;
            (scaled.matmul(&right)?, kept)
        }
        LowrankMethod::Brp => {
            let cfg = BrpConfig {
                rank: params.rank,
                power: params.q,
                oversample: params.oversample,
                refine: true,
                seed: RngSeed::new(params.seed),
            };
            let res = if params.q == 0 {
                brp_approx(&x, &cfg)?
            } else {
                brp_power(&x, &cfg)?
            };
            if res.rank_shrunk {
                eprintln!(
                    "warning: sketch core had rank below the target; returning rank {}",
                    res.effective_rank
                );
            }
            (res.approx, res.effective_rank)
        }
    };
    let report = MetricsReport {
        rel_error_x: finite_or_none(rel_error(&x, &approx)?),
        rel_error_l: None,
        rel_error_s: None,
        iterations: None,
        wall_seconds: started.elapsed().as_secs_f64(),
        effective_rank: Some(effective_rank),
        converged: true,
    };
    save_matrix(&artifact(&params.out_dir, "L", params.format), &approx, params.format)?;
    write_metrics(&params.out_dir.join("metrics.json"), &report)?;
    Ok(true)
}

pub fn run_lingodec(params: &LingodecParams) -> Result<bool, CliError> {
    let started = Instant::now();
    ensure_out_dir(&params.out_dir)?;
    let x = load_matrix(&params.input, params.in_format)?;
    let z = load_matrix(&params.features, params.features_format)?;
    let lambda = params
        .lambda
        .unwrap_or(1.0 / x.rows().max(x.cols()) as f64);
    let cfg = LinGodecConfig {
        rank: params.rank,
        lambda,
        tolerance: params.tol,
        max_iters: params.max_iters,
        seed: RngSeed::new(params.seed),
        brp_accelerated: params.brp,
    };
    let res = lingodec(&x, &z, &cfg)?;
    for warning in &res.warnings {
        eprintln!("warning: {warning}");
    }
    let fitted = res.weights.matmul_bt(&z)?;
    let recomposed = fitted.add(&res.sparse)?;
    let rel_error_l = match params.truth_w.as_ref() {
        Some(path) => {
            let w_true = load_matrix(path, MatrixFormat::infer(path)?)?;
            let fitted_true = w_true.matmul_bt(&z).map_err(|e| {
                CliError::Config(format!(
                    "{}: ground-truth weights do not match the feature matrix: {e}",
                    path.display()
                ))
            })?;
            finite_or_none(rel_error(&fitted_true, &fitted)?)
        }
        None => None,
    };
    let report = MetricsReport {
        rel_error_x: finite_or_none(rel_error(&x, &recomposed)?),
        rel_error_l,
        rel_error_s: truth_error(params.truth_s.as_ref(), &res.sparse)?,
        iterations: Some(res.iterations),
        wall_seconds: started.elapsed().as_secs_f64(),
        effective_rank: Some(usable_rank(&res.weights)?),
        converged: res.converged,
    };
    save_matrix(&artifact(&params.out_dir, "W", params.format), &res.weights, params.format)?;
    save_matrix(&artifact(&params.out_dir, "S", params.format), &res.sparse, params.format)?;
    write_metrics(&params.out_dir.join("metrics.json"), &report)?;
    Ok(res.converged)
}

pub fn run_synth(params: &SynthParams) -> Result<bool, CliError> {
    ensure_out_dir(&params.out_dir)?;
    let seed = RngSeed::new(params.seed);
    let instance = match params.generator {
        Generator::Godec => {
            let rank = params
                .rank
                .ok_or_else(|| CliError::Config("godec generator needs --rank".into()))?;
            let card = params
                .card
                .ok_or_else(|| CliError::Config("godec generator needs --card".into()))?;
            unmix::gen_godec_instance(params.n, rank, card, params.sigma, &seed)?
        }
        Generator::Phase => {
            let ratio = params
                .rank_ratio
                .ok_or_else(|| CliError::Config("phase generator needs --rank-ratio".into()))?;
            let rho = params
                .rho
                .ok_or_else(|| CliError::Config("phase generator needs --rho".into()))?;
            unmix::gen_phase_instance(params.n, ratio, rho, &seed)?
        }
        Generator::Lingodec => {
            let m = params
                .m
                .ok_or_else(|| CliError::Config("lingodec generator needs --m".into()))?;
            let d = params
                .d
                .ok_or_else(|| CliError::Config("lingodec generator needs --d".into()))?;
            let ratio = params
                .rank_ratio
                .ok_or_else(|| CliError::Config("lingodec generator needs --rank-ratio".into()))?;
            let rho = params
                .rho
                .ok_or_else(|| CliError::Config("lingodec generator needs --rho".into()))?;
            unmix::gen_lingodec_instance(m, params.n, d, ratio, rho, &seed)?
        }
    };
    let fmt = params.format;
    save_matrix(&artifact(&params.out_dir, "x", fmt), &instance.x, fmt)?;
    save_matrix(&artifact(&params.out_dir, "l_true", fmt), &instance.l_true, fmt)?;
    save_matrix(&artifact(&params.out_dir, "s_true", fmt), &instance.s_true, fmt)?;
    save_matrix(&artifact(&params.out_dir, "g_true", fmt), &instance.g_true, fmt)?;
    if let Some(w) = &instance.w_true {
        save_matrix(&artifact(&params.out_dir, "w_true", fmt), w, fmt)?;
    }
    if let Some(z) = &instance.z {
        save_matrix(&artifact(&params.out_dir, "z", fmt), z, fmt)?;
    }
    let meta = serde_json::json!({
        "generator": instance.meta.generator,
        "parameters": instance.meta.parameters,
        "seed": instance.meta.seed.seed(),
        "seed_path": instance.meta.seed.path(),
    });
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::Solver(format!("meta serialization: {e}")))?;
    text.push('\n');
    write_atomic(&params.out_dir.join("meta.json"), text.as_bytes())?;
    Ok(true)
}

pub fn run_phase(params: &PhaseParams) -> Result<bool, CliError> {
    ensure_out_dir(&params.out_dir)?;
    let grid = match params.grid.as_str() {
        "default" => unmix::default_phase_grid(),
        path => parse_grid_file(Path::new(path))?,
    };
    let solver = match params.solver {
        Solver::Godec => PhaseSolver::Godec,
        Solver::Grebsmo => PhaseSolver::Grebsmo,
        Solver::Lingodec => PhaseSolver::Lingodec,
    };
    let cells = unmix::run_phase_diagram(
        solver,
        &grid,
        params.n,
        params.trials,
        &RngSeed::new(params.seed),
    )?;
    write_atomic(&params.out_dir.join("phase.csv"), unmix::phase_csv(&cells).as_bytes())?;
    Ok(true)
}

/// A custom phase grid: CSV rows of `rho,rank_ratio`, optional header.
fn parse_grid_file(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let m = load_matrix(path, MatrixFormat::Csv)?;
    if m.cols() != 2 {
        return Err(CliError::input(
            path,
            format!("a grid file has exactly 2 columns (rho, rank_ratio), found {}", m.cols()),
        ));
    }
    Ok((0..m.rows()).map(|i| (m.get(i, 0), m.get(i, 1))).collect())
}

pub fn run_video_demo(params: &VideoDemoParams) -> Result<bool, CliError> {
    let started = Instant::now();
    let spec = VideoSpec {
        frames: params.frames,
        width: params.width,
        height: params.height,
    };
    spec.validate()?;
    ensure_out_dir(&params.out_dir)?;
    let frames_dir = params.out_dir.join("frames");
    ensure_out_dir(&frames_dir)?;
    for t in 0..spec.frames {
        let pixels = render_frame(&spec, t);
        save_pgm(
            &frames_dir.join(format!("frame_{t:04}.pgm")),
            spec.width,
            spec.height,
            &pixels,
        )?;
    }

    let (x, _, _) = load_frames(&frames_dir)?;
    let cfg = GodecConfig {
        rank: 1,
        cardinality: spec.frames * SQUARE_SIDE * SQUARE_SIDE,
        tolerance: 1e-7,
        power: 2,
        max_iters: 100,
        seed: RngSeed::new(params.seed),
        engine: GodecEngine::Brp,
    };
    let res = godec(&x, &cfg)?;

    let mut csv = String::from("frame,jaccard\n");
    for t in 0..spec.frames {
        let recovered: BTreeSet<usize> = (0..x.cols())
            .filter(|&p| res.sparse.get(t, p) != 0.0)
            .collect();
        let score = jaccard(&recovered, &truth_support(&spec, t));
        csv.push_str(&format!("{t},{score:.16e}\n"));
    }

    let recomposed = res.low_rank.add(&res.sparse)?;
    let report = MetricsReport {
        rel_error_x: finite_or_none(rel_error(&x, &recomposed)?),
        rel_error_l: None,
        rel_error_s: None,
        iterations: Some(res.iterations),
        wall_seconds: started.elapsed().as_secs_f64(),
        effective_rank: Some(res.effective_rank),
        converged: res.converged,
    };
    let fmt = params.format;
    save_matrix(&artifact(&params.out_dir, "background", fmt), &res.low_rank, fmt)?;
    save_matrix(&artifact(&params.out_dir, "foreground", fmt), &res.sparse, fmt)?;
    write_atomic(&params.out_dir.join("jaccard.csv"), csv.as_bytes())?;
    write_metrics(&params.out_dir.join("metrics.json"), &report)?;
    Ok(res.converged)
}
