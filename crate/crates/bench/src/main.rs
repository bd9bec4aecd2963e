use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use esa_bench::config::{parse_seed_list, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "esa-bench", version, about = "Extremum-seeking control and ESA experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ESC vs search gradient vs gradient descent on static and moving quadratics
    EscDemo(Common),
    /// Baseline vs baseline+ESA training over a seed list
    Train(Common),
    /// Sweep one ESA hyperparameter
    Ablation(Common),
    /// Raw and high-pass filtered Q along one action dimension of a checkpoint
    ScanQ(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Comma-separated seeds or ranges, e.g. `0,1,2` or `0-4`
    #[arg(long, value_name = "LIST")]
    seed_list: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Dotted `key=value` applied on top of the file, e.g. `rl.policy_lr=0.001`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(mode: Mode, c: &Common) -> Result<ExperimentConfig> {
    let mut overrides = c.overrides.clone();
    if let Some(list) = &c.seed_list {
        let seeds = parse_seed_list(list)?;
        overrides.push(format!("seeds={seeds:?}"));
    }
    let mut cfg = ExperimentConfig::load_for(&c.config, mode, &overrides)?;
    if let Some(out) = &c.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.command {
        Command::EscDemo(c) => (Mode::EscDemo, c),
        Command::Train(c) => (Mode::Train, c),
        Command::Ablation(c) => (Mode::Ablation, c),
        Command::ScanQ(c) => (Mode::ScanQ, c),
    };
    let cfg = match load(mode, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match esa_bench::run(&cfg) {
        Ok(out) => {
            println!("config_hash={}", cfg.hash());
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.ok() {
                ExitCode::SUCCESS
            } else {
                for f in &out.failures {
                    eprintln!("failed: {f}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
