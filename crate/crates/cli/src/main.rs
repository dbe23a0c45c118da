use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::RunContext;
use config::ExperimentConfig;
use output::{sha256_hex, Manifest, OutputDir};

/// Audits, simulation, density evolution and smoothness certificates for
/// one-dimensional jump SDEs.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory; each command writes to a
    /// subdirectory named after it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Audit the model assumptions.
    Check,
    /// Sample terminal states of independent paths.
    Simulate,
    /// Evolve a density and audit its Sobolev norms.
    Evolve,
    /// Build the regularizing kernels and audit their norms.
    Kernels,
    /// Certify smoothness from the characteristic-function decay.
    Certify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Simulate => "simulate",
            Command::Evolve => "evolve",
            Command::Kernels => "kernels",
            Command::Certify => "certify",
        }
    }
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<jumplaw::Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let started = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| anyhow::anyhow!("--config is required"))?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (cfg, text) = ExperimentConfig::load(path)?;
    let model = cfg.model.build()?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone()).join(cli.command.name());
    let mut out = OutputDir::create(&dir)?;
    let ctx = RunContext { cfg: &cfg, model, seed_override: cli.seed };
    let outcome = match cli.command {
        Command::Check => commands::check(&ctx, &mut out),
        Command::Simulate => commands::simulate(&ctx, &mut out),
        Command::Evolve => commands::evolve(&ctx, &mut out),
        Command::Kernels => commands::kernels(&ctx, &mut out),
        Command::Certify => commands::certify(&ctx, &mut out),
    }?;
    let mut extra = outcome.manifest;
    extra.insert("pass".into(), outcome.pass.into());
    Manifest {
        command: cli.command.name(),
        config_sha256: sha256_hex(&text),
        seed: outcome.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        extra,
    }
    .write(&mut out)?;
    eprintln!("{}: {} ({})", cli.command.name(), if outcome.pass { "pass" } else { "FAIL" }, out.path().display());
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
