//! Command-line front end. The binary is a thin wrapper over [`main_with_args`].

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::{
    calibrate, run_error_vs_n, run_replay, run_stream_filter, run_theta_recovery,
    write_error_curve_csv, write_error_long_csv, write_trace_csv, ExperimentConfig, StreamOptions,
};
use crate::error::{Error, Result};
use crate::filters::{Method, NoiseModel};
use crate::genmodel::generate_dataset;
use crate::io::{self, DatasetFile, SummaryFile};
use crate::macroobs::estimate_model;
use crate::simplex::{NoiseParams, ObservationSequence};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hbni", version, about = "Hierarchical Bayesian noise inference benchmarks")]
pub struct Cli {
    /// JSON experiment config; defaults are used for missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from the generative model.
    Generate,
    /// Infer noise parameters with MCMC.
    Infer {
        /// Dataset CSV; generated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one filter over a recorded stream.
    Filter {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "hbni")]
        method: Method,
        /// Noise file (`{"theta": [...]}` or a summary); calibrated when omitted.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// `ROW:PATH`, switch HBNI noise before the given 1-based row.
        #[arg(long = "noise-update")]
        noise_updates: Vec<String>,
    },
    /// Classification error versus number of observations.
    ErrorCurve,
    /// Estimate the macro-observation tables.
    MacroModel {
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Run every configured filter over a recorded stream.
    Replay {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        noise: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    tool: &'a str,
    config_hash: String,
    point: &'a NoiseParams,
    summary: &'a crate::inference::ChainSummary,
}

/// Parses `args` and runs the command, mapping errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_DATA })
        }
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    pool.install(|| dispatch(&cli.command, &config, &out))
}

fn dispatch(command: &Command, config: &ExperimentConfig, out: &Path) -> Result<()> {
    let hash = config.hash();
    match command {
        Command::Generate => {
            let generative = config.generative();
            let data = generate_dataset(&generative, config.dataset.n, config.dataset.per_class)?;
            let theta = generative.realized_theta()?;
            io::write_dataset_csv(io::create_buffered(out.join("dataset.csv"))?, &data, &hash)?;
            let file = DatasetFile::new(generative, config.dataset.per_class, theta, &data, hash);
            io::write_json(out.join("dataset.json"), &file)
        }
        Command::Infer { data } => {
            let data = data.as_deref().map(read_stream).transpose()?.flatten();
            if matches!(data.as_ref(), Some(d) if d.is_empty()) {
                return Err(Error::Empty("dataset"));
            }
            let report = run_theta_recovery(config, data.as_ref())?;
            let summary = &report.summary;
            io::write_chain_csv(
                io::create_buffered(out.join("chain.csv"))?,
                summary.classes,
                &summary.samples,
                &hash,
            )?;
            io::write_json(
                out.join("summary.json"),
                &SummaryFile {
                    tool: crate::TOOL_VERSION.to_string(),
                    config_hash: hash.clone(),
                    summary: summary.clone(),
                },
            )?;
            let medians = NoiseParams::new(summary.theta.iter().map(|p| p.median).collect())?;
            io::write_json(out.join("noise.json"), &io::NoiseFile::new(&medians, hash))?;
            io::write_json(out.join("report.json"), &report)
        }
        Command::Filter {
            data,
            method,
            noise,
            noise_updates,
        } => {
            let data = read_stream(data)?;
            let mut options = StreamOptions {
                noise: stream_noise(config, noise.as_deref(), *method == Method::Hbni)?,
                ..Default::default()
            };
            for spec in noise_updates {
                options.noise_updates.push(parse_noise_update(spec)?);
            }
            let trace = run_stream_filter(data.as_ref(), *method, &options)?;
            let classes = data.as_ref().map_or(0, ObservationSequence::classes);
            write_trace_csv(io::create_buffered(out.join("trace.csv"))?, classes, &trace, &hash)
        }
        Command::ErrorCurve => {
            let set = run_error_vs_n(config)?;
            write_error_long_csv(io::create_buffered(out.join("error_long.csv"))?, &set, &hash)?;
            write_error_curve_csv(io::create_buffered(out.join("error_curve.csv"))?, &set, &hash)?;
            let calibration = calibrate(config)?;
            io::write_json(
                out.join("calibration.json"),
                &CalibrationFile {
                    tool: crate::TOOL_VERSION,
                    config_hash: hash,
                    point: &calibration.point,
                    summary: &calibration.summary,
                },
            )
        }
        Command::MacroModel { noise } => {
            let noise = match noise {
                Some(path) => io::read_noise_file(path)?,
                None => calibrate(config)?.point,
            };
            let model = estimate_model(&config.generative(), &noise, &config.macro_options())?;
            io::write_json(out.join("macro_model.json"), &model)
        }
        Command::Replay { data, noise } => {
            let data = read_stream(data)?;
            let wants_hbni = config.filters.contains(&Method::Hbni);
            let options = StreamOptions {
                noise: stream_noise(config, noise.as_deref(), wants_hbni)?,
                ..Default::default()
            };
            let trace = run_replay(data.as_ref(), &config.filters, &options)?;
            let classes = data.as_ref().map_or(0, ObservationSequence::classes);
            write_trace_csv(io::create_buffered(out.join("trace.csv"))?, classes, &trace, &hash)
        }
    }
}

fn read_stream(path: &Path) -> Result<Option<ObservationSequence>> {
    io::read_stream_csv(io::open_buffered(path)?)
}

fn stream_noise(
    config: &ExperimentConfig,
    path: Option<&Path>,
    needed: bool,
) -> Result<Option<NoiseModel>> {
    match path {
        Some(p) => Ok(Some(NoiseModel::Point(io::read_noise_file(p)?))),
        None if needed => Ok(Some(calibrate(config)?.noise)),
        None => Ok(None),
    }
}

fn parse_noise_update(spec: &str) -> Result<(usize, NoiseParams)> {
    let (row, path) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("noise update `{spec}` is not ROW:PATH")))?;
    let row: usize = row
        .parse()
        .map_err(|e| Error::Config(format!("noise update row `{row}`: {e}")))?;
    if row == 0 {
        return Err(Error::Config("noise update rows are 1-based".into()));
    }
    Ok((row, io::read_noise_file(path)?))
}
