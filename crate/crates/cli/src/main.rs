use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use icae_cli::{parse_config, run_pipeline, ExperimentConfig, Stage};

/// Exit status when every stage ran but a check failed.
const CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "icae", version, about = "Train and audit an independence conditional autoencoder")]
struct Cli {
    #[arg(value_enum)]
    stage: Stage,

    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Global seed; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    quiet: bool,
}

fn load(cli: &Cli) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("icae-run"));
    Ok((cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let mut log = |msg: &str| {
        if !quiet {
            println!("{msg}");
        }
    };
    let result = load(&cli).and_then(|(cfg, out)| run_pipeline(&cfg, &out, cli.stage, &mut log));
    match result {
        Ok(summary) if summary.all_passed() => ExitCode::SUCCESS,
        Ok(summary) => {
            for c in summary.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} ({})", c.name, c.detail);
            }
            ExitCode::from(CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
