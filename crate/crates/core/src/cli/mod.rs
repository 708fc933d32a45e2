//! The `gpk` command line: argument parsing, settings resolution, run
//! manifests and the six subcommands.
//!
//! Exit codes: 0 success, 1 input/parse/IO errors, 2 geometric errors.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ConfigFile;
pub use manifest::{digest_hex, write_atomic, RunManifest};

use crate::analysis::AnalysisError;
use crate::attention::AttentionError;
use crate::dataset::DatasetError;
use crate::geometry::GeometryError;
use crate::maps::MapError;

#[derive(Debug, Parser)]
#[command(name = "gpk", version, about = "Ground-plane maps, statistics and reference checks for roadside cameras")]
pub struct Cli {
    /// Settings file of `key = value` lines; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write ground depth, global and refined plane-equation maps per frame.
    GenMaps(GenMapsArgs),
    /// Clean vs. perturbed row scatter and overlap per quantity.
    Perturb(PerturbArgs),
    /// Depth and attitude histograms.
    Stats(StatsArgs),
    /// Generate a synthetic roadside dataset.
    Synth(SynthArgs),
    /// Evaluate the training losses between a prediction and a label file.
    Losses(LossesArgs),
    /// Run the attention/loss invariant suite.
    CheckAttn(CheckAttnArgs),
}

/// Where frames come from: label/calib/denorm directories, or the
/// synthetic generator.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Directory of per-frame calibration files.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Directory of per-frame label files.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory of per-frame ground-plane files.
    #[arg(long)]
    pub denorm: Option<PathBuf>,
    /// Use generated frames instead of input directories.
    #[arg(long)]
    pub synthetic: bool,
    /// Synthetic frame count.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Synthetic objects per frame.
    #[arg(long)]
    pub objects: Option<usize>,
    /// Calibration key remapping, e.g. `P2=cam_K,Tr_world_to_cam=cam_RT`.
    #[arg(long)]
    pub calib_keys: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Image size as HxW.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Map stride relative to the image.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["1", "16"]))]
    pub stride: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenMapsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, 0 by default.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, 0 by default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard deviation of the roll/pitch offsets, radians.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of consecutive seeds to run, starting at --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// depth, roll, pitch or all.
    #[arg(long)]
    pub quantity: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, 0 by default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bin count, 64 by default.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed, 0 by default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Frame count.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Objects per frame.
    #[arg(long)]
    pub objects: Option<usize>,
    /// Image size as HxW.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Calibration key remapping for the written files.
    #[arg(long)]
    pub calib_keys: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct LossesArgs {
    /// Prediction file (label format, optional trailing score).
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Label file the prediction is scored against.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Calibration file used to project 3D centres.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Predicted plane-equation map (GPKM).
    #[arg(long)]
    pub pred_map: Option<PathBuf>,
    /// Label plane-equation map (GPKM).
    #[arg(long)]
    pub label_map: Option<PathBuf>,
    /// Calibration key remapping.
    #[arg(long)]
    pub calib_keys: Option<String>,
    /// Also write losses.json and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckAttnArgs {
    /// Seed for the randomized invariant inputs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Verify the digests of a fixture JSON file.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Write a fixture JSON file for the current seed.
    #[arg(long)]
    pub write_fixture: Option<PathBuf>,
}

/// A failed run, with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Geometry(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Geometry(_) => 2,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e.to_string())
    }
}

fn dataset_is_geometry(e: &DatasetError) -> bool {
    match e {
        DatasetError::Geometry(_) => true,
        DatasetError::InFile { source, .. } => dataset_is_geometry(source),
        _ => false,
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        if dataset_is_geometry(&e) { Self::Geometry(e.to_string()) } else { Self::Input(e.to_string()) }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Geometry(_) | MapError::AllDegenerate(_) | MapError::InsufficientPoints(_) => {
                Self::Geometry(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Geometry(g) => g.into(),
            AnalysisError::Map(m) => m.into(),
            e => Self::Input(e.to_string()),
        }
    }
}

impl From<AttentionError> for CliError {
    fn from(e: AttentionError) -> Self {
        match e {
            AttentionError::Map(m) => m.into(),
            e => Self::Input(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let jobs = match cli.jobs {
        Some(j) => Some(j),
        None => config.usize("jobs")?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command, &config))
}
