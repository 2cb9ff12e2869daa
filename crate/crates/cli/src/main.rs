//! `marline` command-line front end: dataset export, experiment runs and
//! grid search from versioned TOML files.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use marline::eval::{
    grid_search, run_experiment, write_grid_csv, write_results_csv, write_segments_csv, write_summary_csv,
};
use marline::streams::{interleave, write_schedule_csv, StreamSchedule};
use marline::Error;

#[derive(Parser)]
#[command(name = "marline", version, about = "Online multi-source transfer learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the dataset of run 0 as CSV (dataset.csv).
    Generate(Common),
    /// Run the experiment; writes results.csv, summary.csv and segments.csv.
    Run(Common),
    /// Grid-search ensemble size, theta and sigma; writes grid.csv.
    Grid(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML, `version = 1`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Base seed; overrides `experiment.seed_base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    parallelism: Option<u32>,
    /// Override a config value, e.g. `--set model.theta=0.95`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Usage(String),
    Data(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Invariant(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) => Failure::Usage(msg),
            Error::Invariant(_) => Failure::Invariant(msg),
            _ => Failure::Data(msg),
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_out(out: &Path, name: &str, write: impl FnOnce(BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let file = create(out, name)?;
    write(file).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", out.join(name).display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    let (Command::Generate(common) | Command::Run(common) | Command::Grid(common)) = &command;
    let mut file = config::load(&common.config, &common.overrides)?;
    if let Some(seed) = common.seed {
        file.experiment.seed_base = seed;
    }
    let spec = file.experiment_spec();
    spec.validate()?;
    let parallelism = common.parallelism.map(|n| n as usize);
    fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Usage(format!("cannot create output directory {}: {e}", common.out.display())))?;
    let out = common.out.as_path();

    match command {
        Command::Generate(_) => {
            let (target, sources) = spec.streams(0)?;
            let schedule: StreamSchedule = if file.generate.include_sources {
                interleave(&target, &sources, spec.interleave)?
            } else {
                interleave(&target, &[], spec.interleave)?
            };
            write_out(out, "dataset.csv", |w| write_schedule_csv(&schedule, w))?;
            println!("wrote {} rows to {}", schedule.len(), out.join("dataset.csv").display());
        }
        Command::Run(_) => {
            let result = run_experiment(&spec, parallelism)?;
            write_out(out, "results.csv", |w| write_results_csv(&result, w))?;
            write_out(out, "summary.csv", |w| write_summary_csv(&result, w))?;
            write_out(out, "segments.csv", |w| write_segments_csv(&result, w))?;
            println!("objective {} over {} runs", result.objective, result.runs.len());
        }
        Command::Grid(_) => {
            let result = grid_search(&spec, &file.grid, parallelism)?;
            write_out(out, "grid.csv", |w| write_grid_csv(&result, w))?;
            let b = result.best;
            println!(
                "best k={} theta={} sigma={} objective={} ({} points)",
                b.ensemble_size,
                b.theta,
                b.sigma,
                b.objective,
                result.points.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
