//! `unmix` — low-rank + sparse decomposition from the command line.
//!
//! Exit codes: 0 on success, 1 when a solver finishes without reaching its
//! tolerance (artifacts are still written), 2 on any input or configuration
//! problem. Diagnostics go to standard error; artifacts go to `--out-dir`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unmix_cli::commands::{
    run_decompose, run_lingodec, run_lowrank, run_phase, run_synth, run_video_demo,
    DecomposeParams, InputSource, LingodecParams, LowrankParams, PhaseParams, SynthParams,
    VideoDemoParams,
};
use unmix_cli::config::{
    load_config, DecomposeFile, Direction, Engine, Generator, LingodecFile, LowrankFile,
    LowrankMethod, PhaseFile, Solver, SynthFile, VideoDemoFile,
};
use unmix_cli::error::CliError;
use unmix_cli::io::MatrixFormat;

#[derive(Parser)]
#[command(
    name = "unmix",
    version,
    about = "Decomposes dense matrices into low-rank + sparse + noise parts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Values given here override the
/// config file; the config file overrides built-in defaults.
#[derive(Args)]
struct Common {
    /// TOML config file; keys are the long flag names with `_` for `-`.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory receiving every artifact (created if missing).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a matrix into a low-rank part L and a sparse part S.
    Decompose(DecomposeArgs),
    /// Low-rank approximation only (randomized or exact).
    Lowrank(LowrankArgs),
    /// Recover low-rank weights W with X ~ W Z^T + S for known features Z.
    Lingodec(LingodecArgs),
    /// Generate a synthetic instance with its planted ground truth.
    Synth(SynthArgs),
    /// Sweep recovery success rates over a (rho, rank-ratio) grid.
    Phase(PhaseArgs),
    /// Background/foreground separation on generated footage.
    VideoDemo(VideoDemoArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: Common,
    /// Input matrix file (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    r#in: Option<PathBuf>,
    /// Input encoding; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    in_format: Option<MatrixFormat>,
    /// Read a directory of PGM frames (frames become rows) instead of --in.
    #[arg(long, value_name = "DIR", conflicts_with = "in")]
    frames_dir: Option<PathBuf>,
    /// With --frames-dir: make frames columns instead of rows.
    #[arg(long)]
    transpose: bool,
    /// Solver engine.
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Rank budget for L (godec engines).
    #[arg(long)]
    rank: Option<usize>,
    /// Cardinality budget for S (godec engines).
    #[arg(long)]
    card: Option<usize>,
    /// Power-scheme exponent for godec-brp; 0 is the closed form.
    #[arg(long)]
    q: Option<usize>,
    /// Stop once the squared relative residual reaches this (godec engines).
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration cap (godec engines).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Directions appended per greedy phase (grebsmo).
    #[arg(long)]
    rank_step: Option<usize>,
    /// Starting rank of the greedy factorization (grebsmo).
    #[arg(long)]
    initial_rank: Option<usize>,
    /// Rank ceiling of the greedy factorization (grebsmo).
    #[arg(long)]
    max_rank: Option<usize>,
    /// l1 weight of the sparse part (grebsmo); 0 disables S.
    #[arg(long)]
    lambda: Option<f64>,
    /// Polishing iterations per greedy phase (grebsmo).
    #[arg(long)]
    inner_iters: Option<usize>,
    /// Stop once the relative residual reaches this (grebsmo).
    #[arg(long)]
    tol: Option<f64>,
    /// How greedy directions are proposed (grebsmo).
    #[arg(long, value_enum)]
    direction: Option<Direction>,
    /// Ground-truth L for metrics (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    truth_l: Option<PathBuf>,
    /// Ground-truth S for metrics (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    truth_s: Option<PathBuf>,
    /// Output matrix encoding.
    #[arg(long, value_enum)]
    format: Option<MatrixFormat>,
}

#[derive(Args)]
struct LowrankArgs {
    #[command(flatten)]
    common: Common,
    /// Input matrix file (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    r#in: Option<PathBuf>,
    /// Input encoding; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    in_format: Option<MatrixFormat>,
    /// Approximation method.
    #[arg(long, value_enum)]
    method: Option<LowrankMethod>,
    /// Target rank.
    #[arg(long)]
    rank: Option<usize>,
    /// Power-scheme exponent (brp); 0 is the closed form.
    #[arg(long)]
    q: Option<usize>,
    /// Extra sketch columns (brp).
    #[arg(long)]
    oversample: Option<usize>,
    /// Output matrix encoding.
    #[arg(long, value_enum)]
    format: Option<MatrixFormat>,
}

#[derive(Args)]
struct LingodecArgs {
    #[command(flatten)]
    common: Common,
    /// Input matrix X (.csv or .f64le), one row per sample.
    #[arg(long, value_name = "FILE")]
    r#in: Option<PathBuf>,
    /// Input encoding; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    in_format: Option<MatrixFormat>,
    /// Feature matrix Z (.csv or .f64le), one row per column of X.
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Feature-matrix encoding; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    features_format: Option<MatrixFormat>,
    /// Rank budget for the weight matrix W.
    #[arg(long)]
    rank: Option<usize>,
    /// l1 weight of the sparse part; defaults to 1/max(dim X).
    #[arg(long)]
    lambda: Option<f64>,
    /// Stop once the relative objective change falls below this.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Use randomized projections inside the weight update.
    #[arg(long)]
    brp: bool,
    /// Ground-truth W for metrics (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    truth_w: Option<PathBuf>,
    /// Ground-truth S for metrics (.csv or .f64le).
    #[arg(long, value_name = "FILE")]
    truth_s: Option<PathBuf>,
    /// Output matrix encoding.
    #[arg(long, value_enum)]
    format: Option<MatrixFormat>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Instance family to generate.
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    /// Square size (godec, phase) or column count (lingodec).
    #[arg(long)]
    n: Option<usize>,
    /// Row count (lingodec generator).
    #[arg(long)]
    m: Option<usize>,
    /// Feature count (lingodec generator).
    #[arg(long)]
    d: Option<usize>,
    /// Planted rank (godec generator).
    #[arg(long)]
    rank: Option<usize>,
    /// Planted sparse cardinality (godec generator).
    #[arg(long)]
    card: Option<usize>,
    /// Noise standard deviation (godec generator).
    #[arg(long)]
    sigma: Option<f64>,
    /// Planted rank as a fraction of n (phase, lingodec generators).
    #[arg(long)]
    rank_ratio: Option<f64>,
    /// Sparse corruption density (phase, lingodec generators).
    #[arg(long)]
    rho: Option<f64>,
    /// Output matrix encoding.
    #[arg(long, value_enum)]
    format: Option<MatrixFormat>,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: Common,
    /// Solver whose recovery rate is measured.
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    /// Instance size (n x n).
    #[arg(long)]
    n: Option<usize>,
    /// Trials per grid cell.
    #[arg(long)]
    trials: Option<usize>,
    /// "default" (6x6 grid over 0.02..0.3) or a CSV file of rho,rank_ratio rows.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct VideoDemoArgs {
    #[command(flatten)]
    common: Common,
    /// Number of frames to render.
    #[arg(long)]
    frames: Option<usize>,
    /// Frame width in pixels.
    #[arg(long)]
    width: Option<usize>,
    /// Frame height in pixels.
    #[arg(long)]
    height: Option<usize>,
    /// Output matrix encoding.
    #[arg(long, value_enum)]
    format: Option<MatrixFormat>,
}

/// Input path plus explicit-or-inferred encoding.
fn resolve_input(
    path: Option<PathBuf>,
    explicit: Option<MatrixFormat>,
    what: &str,
) -> Result<(PathBuf, MatrixFormat), CliError> {
    let path = path.ok_or_else(|| CliError::Config(format!("{what} is required")))?;
    let format = match explicit {
        Some(f) => f,
        None => MatrixFormat::infer(&path)?,
    };
    Ok((path, format))
}

fn decompose_params(args: DecomposeArgs) -> Result<DecomposeParams, CliError> {
    let file: DecomposeFile = load_config(args.common.config.as_deref())?;
    let input = match (args.r#in.or(file.input), args.frames_dir.or(file.frames_dir)) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either --in or --frames-dir, not both".into()))
        }
        (Some(path), None) => {
            let (path, format) = resolve_input(Some(path), args.in_format.or(file.in_format), "--in")?;
            InputSource::Matrix { path, format }
        }
        (None, Some(dir)) => InputSource::Frames {
            dir,
            transpose: args.transpose || file.transpose.unwrap_or(false),
        },
        (None, None) => return Err(CliError::Config("an input (--in or --frames-dir) is required".into())),
    };
    Ok(DecomposeParams {
        input,
        engine: args.engine.or(file.engine).unwrap_or(Engine::GodecBrp),
        rank: args.rank.or(file.rank),
        card: args.card.or(file.card),
        q: args.q.or(file.q).unwrap_or(2),
        eps: args.eps.or(file.eps).unwrap_or(1e-7),
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(100),
        rank_step: args.rank_step.or(file.rank_step).unwrap_or(1),
        initial_rank: args.initial_rank.or(file.initial_rank),
        max_rank: args.max_rank.or(file.max_rank),
        lambda: args.lambda.or(file.lambda),
        inner_iters: args.inner_iters.or(file.inner_iters).unwrap_or(3),
        tol: args.tol.or(file.tol).unwrap_or(1e-7),
        direction: args.direction.or(file.direction).unwrap_or(Direction::Random),
        truth_l: args.truth_l.or(file.truth_l),
        truth_s: args.truth_s.or(file.truth_s),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        format: args.format.or(file.format).unwrap_or(MatrixFormat::Csv),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn lowrank_params(args: LowrankArgs) -> Result<LowrankParams, CliError> {
    let file: LowrankFile = load_config(args.common.config.as_deref())?;
    let (input, in_format) =
        resolve_input(args.r#in.or(file.input), args.in_format.or(file.in_format), "--in")?;
    Ok(LowrankParams {
        input,
        in_format,
        method: args.method.or(file.method).unwrap_or(LowrankMethod::Brp),
        rank: args
            .rank
            .or(file.rank)
            .ok_or_else(|| CliError::Config("--rank is required".into()))?,
        q: args.q.or(file.q).unwrap_or(0),
        oversample: args.oversample.or(file.oversample).unwrap_or(5),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        format: args.format.or(file.format).unwrap_or(MatrixFormat::Csv),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn lingodec_params(args: LingodecArgs) -> Result<LingodecParams, CliError> {
    let file: LingodecFile = load_config(args.common.config.as_deref())?;
    let (input, in_format) =
        resolve_input(args.r#in.or(file.input), args.in_format.or(file.in_format), "--in")?;
    let (features, features_format) = resolve_input(
        args.features.or(file.features),
        args.features_format.or(file.features_format),
        "--features",
    )?;
    Ok(LingodecParams {
        input,
        in_format,
        features,
        features_format,
        rank: args
            .rank
            .or(file.rank)
            .ok_or_else(|| CliError::Config("--rank is required".into()))?,
        lambda: args.lambda.or(file.lambda),
        tol: args.tol.or(file.tol).unwrap_or(1e-9),
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(100),
        brp: args.brp || file.brp.unwrap_or(false),
        truth_w: args.truth_w.or(file.truth_w),
        truth_s: args.truth_s.or(file.truth_s),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        format: args.format.or(file.format).unwrap_or(MatrixFormat::Csv),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn synth_params(args: SynthArgs) -> Result<SynthParams, CliError> {
    let file: SynthFile = load_config(args.common.config.as_deref())?;
    Ok(SynthParams {
        generator: args
            .generator
            .or(file.generator)
            .ok_or_else(|| CliError::Config("--generator is required".into()))?,
        n: args
            .n
            .or(file.n)
            .ok_or_else(|| CliError::Config("--n is required".into()))?,
        m: args.m.or(file.m),
        d: args.d.or(file.d),
        rank: args.rank.or(file.rank),
        card: args.card.or(file.card),
        sigma: args.sigma.or(file.sigma).unwrap_or(1e-3),
        rank_ratio: args.rank_ratio.or(file.rank_ratio),
        rho: args.rho.or(file.rho),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        format: args.format.or(file.format).unwrap_or(MatrixFormat::Csv),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn phase_params(args: PhaseArgs) -> Result<PhaseParams, CliError> {
    let file: PhaseFile = load_config(args.common.config.as_deref())?;
    Ok(PhaseParams {
        solver: args
            .solver
            .or(file.solver)
            .ok_or_else(|| CliError::Config("--solver is required".into()))?,
        n: args.n.or(file.n).unwrap_or(100),
        trials: args.trials.or(file.trials).unwrap_or(10),
        grid: args.grid.or(file.grid).unwrap_or_else(|| "default".into()),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn video_demo_params(args: VideoDemoArgs) -> Result<VideoDemoParams, CliError> {
    let file: VideoDemoFile = load_config(args.common.config.as_deref())?;
    Ok(VideoDemoParams {
        frames: args.frames.or(file.frames).unwrap_or(20),
        width: args.width.or(file.width).unwrap_or(32),
        height: args.height.or(file.height).unwrap_or(24),
        out_dir: args.common.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        format: args.format.or(file.format).unwrap_or(MatrixFormat::Csv),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
    })
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Decompose(args) => run_decompose(&decompose_params(args)?),
        Command::Lowrank(args) => run_lowrank(&lowrank_params(args)?),
        Command::Lingodec(args) => run_lingodec(&lingodec_params(args)?),
        Command::Synth(args) => run_synth(&synth_params(args)?),
        Command::Phase(args) => run_phase(&phase_params(args)?),
        Command::VideoDemo(args) => run_video_demo(&video_demo_params(args)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("solver did not reach its tolerance; artifacts were still written");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
