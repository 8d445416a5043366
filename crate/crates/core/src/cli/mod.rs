//! Command-line front end: `trapsim <experiment> [--config PATH] ...`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 simulation failure,
//! 4 I/O failure.

pub mod config;
pub mod output;
mod run;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, ExperimentConfig, Format, Kind, Overrides};
pub use output::{Cell, Metadata, Table};
pub use run::{run_experiment, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "TRAPSIM_WORKERS";

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Parser, Debug)]
#[command(name = "trapsim", version, about = "Monte Carlo experiments for trap models and their scaling limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Aging functions of the trap model
    Aging(Common),
    /// Aging functions of the limit process
    LimitAging(Common),
    /// Walk sequences and the scale factor a(eps)
    ScalingTable(Common),
    /// Range intersection, rho identity and quenched variance
    Diagnose(Common),
    /// Two-sample KS between the rescaled energy and the limit marginal
    Marginal(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config file (TOML with dotted keys)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json, svg
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
    /// Number of worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(crate::Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("configuration error: {m}"),
            Failure::Runtime(e) => format!("simulation error: {e}"),
            Failure::Io(m) => format!("i/o error: {m}"),
        }
    }
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, common) = match cli.command {
        Command::Aging(c) => (Kind::Aging, c),
        Command::LimitAging(c) => (Kind::LimitAging, c),
        Command::ScalingTable(c) => (Kind::ScalingTable, c),
        Command::Diagnose(c) => (Kind::Diagnose, c),
        Command::Marginal(c) => (Kind::Marginal, c),
    };
    match execute(kind, common) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("trapsim: {}", f.message());
            f.code()
        }
    }
}

fn execute(kind: Kind, common: Common) -> Result<Vec<PathBuf>, Failure> {
    let (text, base_dir) = match &common.config {
        Some(p) => (
            fs::read_to_string(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?,
            p.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (String::new(), PathBuf::from(".")),
    };
    let formats = match &common.format {
        None => None,
        Some(list) => Some(
            list.iter()
                .map(|s| s.parse::<Format>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(Failure::Config)?,
        ),
    };
    let ov = Overrides {
        seed: common.seed,
        out: common.out.clone(),
        formats,
    };
    let cfg = ExperimentConfig::parse(kind, &text, &base_dir, &ov).map_err(|e| Failure::Config(e.to_string()))?;

    let workers = match (common.workers, std::env::var(WORKERS_ENV).ok()) {
        (Some(w), _) => Some(w),
        (None, Some(v)) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        (None, None) => cfg.workers,
    };
    if workers == Some(0) {
        return Err(Failure::Config("the worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(crate::Error::InvalidParameter(format!("thread pool: {e}"))))?;
    let outcome = pool.install(|| run_experiment(&cfg)).map_err(Failure::Runtime)?;

    let meta = Metadata {
        version: version_string(),
        kind: kind.as_str().to_string(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        replicas: outcome.replicas,
        settings: cfg.canonical().iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
    };
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", cfg.out_dir.display()));
    let mut written = output::write_tables(
        &cfg.out_dir,
        &meta,
        &outcome.tables,
        cfg.formats.contains(&Format::Csv),
        cfg.formats.contains(&Format::Json),
    )
    .map_err(io)?;
    if cfg.formats.contains(&Format::Svg) {
        for (name, body) in &outcome.plots {
            let p = cfg.out_dir.join(name);
            fs::write(&p, body).map_err(io)?;
            written.push(p);
        }
    }
    Ok(written)
}
