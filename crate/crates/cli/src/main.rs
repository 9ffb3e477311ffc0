//! `matchbench`: stereo and multiview evaluation of local features.
//!
//! Exit codes: 0 on success, 1 when the configuration or the inputs are
//! invalid, 2 when a run fails after validation.

mod args;
mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matchbench_core::dataset::DatasetError;
use matchbench_core::harness::HarnessError;
use matchbench_core::synthetic::SynthError;

use args::RunArgs;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        HarnessError::from(e).into()
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            SynthError::Dataset(d) => d.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "matchbench", version, about = "Stereo and multiview evaluation of local features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match, estimate and score every co-visible pair of the selected scenes.
    Stereo {
        #[command(flatten)]
        run: RunArgs,
        /// Report formats, comma-separated (json, csv).
        #[arg(long, value_delimiter = ',', default_value = "json,csv")]
        format: Vec<String>,
    },
    /// Score ingested reconstructions of image bags against the ground truth.
    Multiview {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        bags: commands::BagArgs,
        /// Reconstructions as <DIR>/<scene>/<bag name>.txt.
        #[arg(long, value_name = "DIR")]
        recon_dir: Option<PathBuf>,
        /// Only write the bag lists to <output>/<scene>/bags.txt.
        #[arg(long)]
        write_bags: bool,
    },
    /// Evaluate a grid of settings and rank the points by mAA.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// TOML grid with any of: ratio, threshold, max-iterations, matching.
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid_ratio: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        grid_threshold: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        grid_max_iterations: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        grid_matching: Vec<String>,
        /// Recompute matches for every grid point.
        #[arg(long)]
        no_cache: bool,
    },
    /// Measure the cost of one RANSAC iteration and suggest an iteration cap.
    Calibrate {
        #[command(flatten)]
        run: RunArgs,
        /// Time budget per pair, seconds.
        #[arg(long, default_value_t = 0.5)]
        target_seconds: f64,
        /// Pairs to measure on.
        #[arg(long, default_value_t = 20)]
        sample_pairs: usize,
    },
    /// Generate a synthetic scene in the standard directory layout.
    Synth {
        /// TOML scene specification.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Data root; the scene is written to <DIR>/<name>.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Check the configuration and parse every input without evaluating.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Also parse the reconstructions under <DIR>/<scene>/.
        #[arg(long, value_name = "DIR")]
        recon_dir: Option<PathBuf>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stereo { run, format } => commands::stereo(&run.resolve()?, &format),
        Command::Multiview { run, bags, recon_dir, write_bags } => {
            commands::multiview(&run.resolve()?, &bags, recon_dir.as_deref(), write_bags)
        }
        Command::Sweep { run, grid, grid_ratio, grid_threshold, grid_max_iterations, grid_matching, no_cache } => {
            let grid = commands::grid(grid.as_deref(), grid_ratio, grid_threshold, grid_max_iterations, grid_matching)?;
            commands::sweep(&run.resolve()?, &grid, !no_cache)
        }
        Command::Calibrate { run, target_seconds, sample_pairs } => {
            commands::calibrate(&run.resolve()?, target_seconds, sample_pairs)
        }
        Command::Synth { spec, out } => commands::synth(&spec, &out),
        Command::Validate { run, recon_dir } => commands::validate(&run.resolve()?, recon_dir.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
