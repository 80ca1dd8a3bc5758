//! `gauss-occ` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 invariant
//! or evaluation failure.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gauss_occ::io::{ColorScheme, IoError};

#[derive(Parser, Debug)]
#[command(name = "gauss-occ", version, about = "Gaussian instance occupancy: splat, evaluate, track")]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true, env = "GUIDE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Splat every frame of a scene into a GOCC file.
    Splat(SplatArgs),
    /// Evaluate predicted against ground-truth occupancy.
    Eval(EvalArgs),
    /// Assign track IDs across the frames of a scene.
    Track(TrackArgs),
    /// Generate a synthetic scene and its ground truth.
    Synth(SynthArgs),
    /// Run the matching and gradient reference checks.
    Losscheck(LosscheckArgs),
    /// Time scene splatting and compare against the dense oracle.
    Bench(BenchArgs),
    /// Write one frame of a GOCC file as a colored PLY point cloud.
    ExportPly(ExportPlyArgs),
}

#[derive(Args, Debug, Clone)]
struct SplatOpts {
    /// Occupancy threshold on the aggregated probability.
    #[arg(long)]
    threshold: Option<f64>,
    /// Mahalanobis cutoff radius.
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Args, Debug)]
struct SplatArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the header grid resolution (meters, all axes).
    #[arg(long)]
    voxel_size: Option<f64>,
    #[command(flatten)]
    splat: SplatOpts,
    /// Evaluate every voxel against every Gaussian instead of culling.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated IoU thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = gauss_occ::metrics::DEFAULT_IOU_THRESHOLDS)]
    ious: Vec<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Ground-truth occupancy; enables the identity-switch count.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Scene with track IDs filled in.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    t_track: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    max_age: Option<u32>,
    #[arg(long)]
    gate_radius: Option<f64>,
    #[arg(long)]
    frame_dt: Option<f64>,
    /// IoU threshold for the identity-switch matching.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[command(flatten)]
    splat: SplatOpts,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Resolution of the default 80 m x 80 m x 6.4 m grid.
    #[arg(long, default_value_t = 0.4)]
    voxel_size: f64,
    #[arg(long)]
    out_scene: PathBuf,
    #[arg(long)]
    out_gt: PathBuf,
}

#[derive(Args, Debug)]
struct LosscheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    hungarian_trials: usize,
    #[arg(long, default_value_t = 7)]
    max_side: usize,
    #[arg(long, default_value_t = 1000)]
    gradient_trials: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 900)]
    instances: usize,
    #[arg(long, default_value_t = 48)]
    k: usize,
    #[arg(long, default_value_t = 0.4)]
    voxel_size: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances timed against the dense oracle.
    #[arg(long, default_value_t = 3)]
    oracle_samples: usize,
    #[arg(long, default_value_t = 0.2)]
    oracle_voxel_size: f64,
    #[command(flatten)]
    splat: SplatOpts,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Color {
    Track,
    Instance,
    Class,
}

impl From<Color> for ColorScheme {
    fn from(c: Color) -> Self {
        match c {
            Color::Track => ColorScheme::Track,
            Color::Instance => ColorScheme::Instance,
            Color::Class => ColorScheme::Class,
        }
    }
}

#[derive(Args, Debug)]
struct ExportPlyArgs {
    #[arg(long)]
    occ: PathBuf,
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Color::Track)]
    color: Color,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Input(String),
    /// Exit 3.
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(_)
            | IoError::Parse { .. }
            | IoError::BadMagic(_)
            | IoError::VersionUnsupported(_)
            | IoError::Truncated { .. } => CliError::Input(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

/// Attaches the offending path to a read or write error.
pub fn at_path<T>(path: &std::path::Path, r: Result<T, IoError>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        CliError::Failure(m) => CliError::Failure(format!("{}: {m}", path.display())),
    })
}

pub fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Splat(a) => commands::splat(a),
        Command::Eval(a) => commands::eval(a),
        Command::Track(a) => commands::track(a),
        Command::Synth(a) => commands::synth(a),
        Command::Losscheck(a) => commands::losscheck(a),
        Command::Bench(a) => bench::run(a),
        Command::ExportPly(a) => commands::export_ply(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Input(msg) | CliError::Failure(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
