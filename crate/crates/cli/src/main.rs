mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use m2i_core::experiment::Mode;
use m2i_core::Error;

use config::RunConfig;

/// Errors with a stable exit code each.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => CliError::Io(e.to_string()),
            Error::Csv(e) if e.is_io_error() => CliError::Io(e.to_string()),
            Error::CyclicGraph => CliError::Internal(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "m2i", version, about = "Factored interactive trajectory prediction on synthetic scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Overrides for the config keys of the same name.
#[derive(Debug, Args)]
struct Flags {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenario directory or JSON-lines file
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Prediction modes; repeat or separate with commas
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_mode)]
    mode: Vec<Mode>,
    /// Add the conditional ablation (reactor given the true influencer future)
    #[arg(long, global = true)]
    teacher_forcing: bool,
    /// Work on multi-agent scenes through the influence graph
    #[arg(long, global = true)]
    multi_agent: bool,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus and its intended-label sidecar
    Generate,
    /// Label every interacting pair with the closest-approach heuristic
    Label,
    /// Train the relation classifier and report accuracy
    TrainRelation,
    /// Write joint predictions for each requested mode
    Predict,
    /// Score each requested mode and write a comparison table
    Evaluate,
    /// Combine metric files into a comparison table and PR-curve data
    Report {
        /// Metric JSON files; defaults to every metrics-*.json in the output directory
        files: Vec<PathBuf>,
    },
}

fn resolve(flags: Flags) -> CliResult<RunConfig> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.corpus {
        cfg.corpus = Some(v);
    }
    if !flags.mode.is_empty() {
        cfg.mode = flags.mode;
    }
    cfg.teacher_forcing |= flags.teacher_forcing;
    cfg.multi_agent |= flags.multi_agent;
    if let Some(v) = flags.workers {
        cfg.workers = v;
    }
    if let Some(v) = flags.out {
        cfg.out = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve(cli.flags)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    match cli.command {
        Command::Generate => commands::generate(&cfg),
        Command::Label => commands::label(&cfg),
        Command::TrainRelation => commands::train_relation(&cfg),
        Command::Predict => commands::predict(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Report { files } => commands::report(&cfg, &files),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("m2i: {e}");
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
