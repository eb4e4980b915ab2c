//! Command-line front end: simulate vineyard passes, count observation
//! streams, run repeated experiments, query the ground-truth oracle and
//! export marker files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vinecount::pipeline::{
    export_run, process_stream_file, run_experiment, CountReport, ExperimentConfig,
    PipelineError,
};
use vinecount::sim::{generate_scene, oracle_count, TrajectoryConfig};

#[derive(Parser)]
#[command(
    name = "vinecount",
    about = "Detection-stream counting of grape bunches, with a built-in vineyard simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a counting pass and write it as an observation stream.
    ///
    /// Produces <OUTPUT>/stream.jsonl, depth rasters under <OUTPUT>/depth/
    /// and the ground truth as <OUTPUT>/scene.json.
    Simulate {
        /// Experiment config file (JSON); defaults apply for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for scene, trajectory jitter and observation noise.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Directory to write the stream into.
        #[arg(long)]
        output: PathBuf,
    },
    /// Count the bunches in an observation stream.
    Count {
        /// Stream file (depth paths resolve against its directory).
        #[arg(long)]
        input: PathBuf,
        /// Write the full count report (JSON) here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write a sphere-marker file of the counted bunches here.
        #[arg(long)]
        markers: Option<PathBuf>,
        /// Ignore detections below this confidence.
        #[arg(long, value_name = "FLOAT")]
        min_confidence: Option<f64>,
    },
    /// Repeat the simulated counting task and summarize the counts.
    ///
    /// Run i uses seed SEED+i over the scene generated from SEED.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Directory for summary.json and per-run reports.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the brute-force ground-truth count for a simulated setup.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Convert a count report into a sphere-marker file.
    Markers {
        /// Count report (JSON) produced by `count` or `experiment`.
        #[arg(long)]
        input: PathBuf,
        /// Marker file to write.
        #[arg(long)]
        output: PathBuf,
    },
}

enum CliError {
    /// Unreadable or malformed input data; exit code 1.
    BadInput(String),
    /// Invalid configuration; exit code 2.
    Config(String),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::BadInput(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::BadInput(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, output } => {
            let cfg = load_config(config.as_deref())?;
            let stream = export_run(&cfg, seed, &output)?;
            println!("wrote {}", stream.display());
            Ok(())
        }
        Command::Count { input, output, markers, min_confidence } => {
            let report = process_stream_file(&input, min_confidence)?;
            println!("count: {}", report.final_count);
            if let Some(path) = output {
                write_file(&path, report.to_json())?;
            }
            if let Some(path) = markers {
                write_markers(&report, &path)?;
            }
            Ok(())
        }
        Command::Experiment { config, runs, seed, output } => {
            let cfg = load_config(config.as_deref())?;
            let (summary, reports) = run_experiment(&cfg, runs, seed)?;
            for (i, count) in summary.counts.iter().enumerate() {
                println!("run {}: {}", i + 1, count);
            }
            println!("mean: {}", summary.mean);
            if let Some(dir) = output {
                fs::create_dir_all(&dir)
                    .map_err(|e| CliError::BadInput(format!("{}: {e}", dir.display())))?;
                write_file(&dir.join("summary.json"), summary.to_json())?;
                for (i, report) in reports.iter().enumerate() {
                    write_file(&dir.join(format!("run_{:03}.json", i + 1)), report.to_json())?;
                }
            }
            Ok(())
        }
        Command::Oracle { config, seed } => {
            let cfg = load_config(config.as_deref())?;
            let scene = generate_scene(seed, &cfg.scene).map_err(PipelineError::from)?;
            let poses = TrajectoryConfig::row_scan(&scene.rows, &cfg.trajectory).nominal_poses();
            let n = oracle_count(
                &scene,
                &poses,
                &cfg.rig.color,
                &cfg.pipeline.locator,
                cfg.noise.occlusion_radius_px,
            );
            println!("{n}");
            Ok(())
        }
        Command::Markers { input, output } => {
            let raw = fs::read_to_string(&input)
                .map_err(|e| CliError::BadInput(format!("{}: {e}", input.display())))?;
            let report = CountReport::from_json(&raw)
                .map_err(|e| CliError::BadInput(format!("{}: {e}", input.display())))?;
            write_markers(&report, &output)?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: String) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn write_markers(report: &CountReport, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    report
        .write_markers(BufWriter::new(file))
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}
