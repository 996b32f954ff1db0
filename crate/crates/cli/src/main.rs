//! `subreg`: dataset generation, training, evaluation, counting, solver and
//! control experiments, and report aggregation.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use commands::count::CountConfig;
use config::{load, resolve, Loaded, SCHEMA_VERSION};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "subreg", version, about = "Subspace regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the top-level `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Top-level scalar overrides as key=value.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset.
    Gen(Common),
    /// Train a regressor.
    Train(Common),
    /// Evaluate a predictor.
    Eval(Common),
    /// Count candidate eigenvectors per spectral position.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        d: Option<u32>,
        /// Monte Carlo draws for the spectral census.
        #[arg(long)]
        mc: Option<usize>,
        /// Most frequent tuples added in the greedy augmentation.
        #[arg(long)]
        greedy: Option<usize>,
    },
    /// Run CG, two-grid or reduced-model experiments.
    Solve(Common),
    /// Run LQR experiments.
    Control(Common),
    /// Aggregate CSVs into summary tables.
    Report(Common),
}

fn required<T: DeserializeOwned>(c: &Common) -> CliResult<Loaded<T>> {
    let path = c.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
    load(path, c.seed, &c.overrides)
}

fn out_dir(c: &Common, name: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| Path::new("runs").join(name))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("SUBREG_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::config(format!("SUBREG_THREADS={v} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn count_config(common: &Common, k: Option<u64>, d: Option<u32>, mc: Option<usize>, greedy: Option<usize>) -> CliResult<Loaded<CountConfig>> {
    let mut value = match &common.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?)
            .map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", p.display())))?,
        None => serde_json::json!({ "schema_version": SCHEMA_VERSION }),
    };
    let obj = value.as_object_mut().ok_or_else(|| CliError::config("configuration must be a JSON object"))?;
    if let Some(k) = k {
        obj.insert("k".into(), k.into());
    }
    if let Some(d) = d {
        obj.insert("d".into(), d.into());
    }
    if let Some(m) = mc {
        obj.insert("mc".into(), m.into());
    }
    if let Some(g) = greedy {
        obj.insert("greedy".into(), g.into());
    }
    resolve(value, common.seed, &common.overrides)
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen(c) => commands::gen::run(&required(&c)?, &out_dir(&c, "gen")),
        Command::Train(c) => commands::train::run(&required(&c)?, &out_dir(&c, "train")),
        Command::Eval(c) => commands::eval::run(&required(&c)?, &out_dir(&c, "eval")),
        Command::Count { common, k, d, mc, greedy } => {
            commands::count::run(&count_config(&common, k, d, mc, greedy)?, &out_dir(&common, "count"))
        }
        Command::Solve(c) => commands::solve::run(&required(&c)?, &out_dir(&c, "solve")),
        Command::Control(c) => commands::control::run(&required(&c)?, &out_dir(&c, "control")),
        Command::Report(c) => commands::report::run(&required(&c)?, &out_dir(&c, "report")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, rec| writeln!(buf, "level={} target={} msg=\"{}\"", rec.level(), rec.target(), rec.args()))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code() as u8)
        }
    }
}
