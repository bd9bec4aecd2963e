//! Experiment runner behind the `esa-bench` binary.
//!
//! Each subcommand reads one TOML experiment file, runs it over a seed list
//! and writes CSV traces (`curves_<variant>_<seed>.csv`, `summary.csv`) and
//! SVG plots (`plot_*.svg`) into an output directory. Every CSV starts with a
//! `# config_hash=<sha256>` comment line, and reruns of the same resolved
//! config produce byte-identical CSVs.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use anyhow::Result;

pub use config::{ExperimentConfig, Mode};

/// What a command run produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Seeds / variants that stopped early, with the reason.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Maximum number of seeds run concurrently, from `ESA_THREADS`.
pub fn thread_cap() -> Option<usize> {
    std::env::var("ESA_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

/// Dispatch on the config's mode.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.mode {
        Mode::EscDemo => commands::esc_demo::run(cfg).map(|(o, _)| o),
        Mode::Train => commands::train::run(cfg).map(|(o, _)| o),
        Mode::Ablation => commands::ablation::run(cfg).map(|(o, _)| o),
        Mode::ScanQ => commands::scan_q::run(cfg).map(|(o, _)| o),
    }
}
