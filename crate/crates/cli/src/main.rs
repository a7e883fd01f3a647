//! `ymgap <subcommand> --config <path> [--out <dir>] [--seed <u64>]`
//!
//! Exit status: 0 when every suite assertion passes, 1 when one fails,
//! 2 on configuration or pipeline errors. Failed runs leave no artifacts.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use config::RunConfig;
use output::Outputs;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    LieCheck,
    ClassicalEvolve,
    HelmholtzCheck,
    FockCheck,
    Spectrum,
    GapScan,
    Propagate,
}

#[derive(Debug, Parser)]
#[command(name = "ymgap", version, about = "Yang-Mills truncation laboratory")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("YMGAP_THREADS") {
        let n: usize = v.parse().with_context(|| format!("YMGAP_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    let mut out = Outputs::create(&cfg.output_dir)?;
    let res = match cli.command {
        Command::LieCheck => commands::lie_check(&cfg, &mut out),
        Command::ClassicalEvolve => commands::classical_evolve(&cfg, &mut out),
        Command::HelmholtzCheck => commands::helmholtz_check(&cfg, &mut out),
        Command::FockCheck => commands::fock_check(&cfg, &mut out),
        Command::Spectrum => commands::spectrum_cmd(&cfg, &mut out),
        Command::GapScan => commands::gap_scan_cmd(&cfg, &mut out),
        Command::Propagate => commands::propagate_cmd(&cfg, &mut out),
    };
    match res {
        Ok(true) => {
            for f in out.files() {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Ok(false) => {
            // keep the report so the failing assertion can be inspected
            let report = out.files().iter().find(|f| f.extension().is_some_and(|e| e == "json")).cloned();
            let body = report.as_ref().and_then(|p| std::fs::read_to_string(p).ok());
            out.discard();
            if let Some(b) = body {
                eprintln!("{b}");
            }
            Ok(false)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ymgap: suite assertions failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("ymgap: {e:#}");
            ExitCode::from(2)
        }
    }
}
