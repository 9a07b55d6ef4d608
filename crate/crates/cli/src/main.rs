use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use platelike_cli::artifacts::OutputDir;
use platelike_cli::config::ExperimentConfig;
use platelike_cli::pipeline::{execute, Stage};
use platelike_cli::{exit_code, EXIT_OK, EXIT_VERIFICATION_FAILED};
use platelike_core::{Error, Result};

#[derive(Parser)]
#[command(name = "platelike", version, about = "Plane-like minimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize, run the enabled checks and every enabled section.
    Run(Opts),
    /// Compute the minimal minimizer only.
    Minimize(Opts),
    /// Minimize, then run the enabled checks on the field.
    Verify(Opts),
    /// Interface width and level-set ordering across directions.
    Sweep(Opts),
    /// Energy growth on balls.
    Growth(Opts),
    /// Cross-strip interaction on growing windows.
    Diverge(Opts),
}

#[derive(clap::Args)]
struct Opts {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "PLATELIKE_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    allow_narrow_strip: bool,
}

fn run(stage: Stage, opts: &Opts) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    cfg.allow_narrow_strip |= opts.allow_narrow_strip;
    let root = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("platelike-out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let out = OutputDir::create(&root)?;
    let outcome = pool.install(|| execute(&cfg, stage, &out))?;
    for rep in &outcome.reports {
        println!("{}", rep.summary());
    }
    println!("artifacts in {}", root.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, opts) = match &cli.command {
        Command::Run(o) => (Stage::Run, o),
        Command::Minimize(o) => (Stage::Minimize, o),
        Command::Verify(o) => (Stage::Verify, o),
        Command::Sweep(o) => (Stage::Sweep, o),
        Command::Growth(o) => (Stage::Growth, o),
        Command::Diverge(o) => (Stage::Diverge, o),
    };
    let code = match run(stage, opts) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFICATION_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
