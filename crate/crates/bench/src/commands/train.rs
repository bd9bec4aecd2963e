use anyhow::{Context, Result};

use super::runs::{run_jobs, write_all, Job, JobResult, VariantSummary};
use crate::config::ExperimentConfig;
use crate::output::Writer;
use crate::Outcome;

pub const BASELINE: &str = "baseline";
pub const ESA: &str = "esa";

#[derive(Debug)]
pub struct TrainReport {
    pub results: Vec<JobResult>,
    pub summaries: Vec<VariantSummary>,
}

impl TrainReport {
    pub fn summary(&self, variant: &str) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.variant == variant)
    }
}

/// Baseline and baseline+ESA over every seed.
pub fn run(cfg: &ExperimentConfig) -> Result<(Outcome, TrainReport)> {
    let env = cfg.env.context("train needs an env")?;
    let esa = cfg.esa.as_ref().context("train needs an [esa] table")?.resolve(env);
    let mut w = Writer::create(cfg)?;
    let mut jobs = Vec::new();
    for &seed in &cfg.seeds {
        jobs.push(Job { variant: BASELINE.into(), seed, esa: None });
        jobs.push(Job { variant: ESA.into(), seed, esa: Some(esa.clone()) });
    }
    let results = run_jobs(env, &cfg.rl, &jobs);
    let variants = vec![BASELINE.to_string(), ESA.to_string()];
    let title = format!("{} on {}", cfg.name, env.name());
    let summaries = write_all(&mut w, &results, &variants, Some(BASELINE), "plot_train.svg", &title)?;
    let failures = results.iter().filter_map(JobResult::failure).collect();
    let outcome = Outcome { out_dir: w.dir.clone(), files: w.files, failures };
    Ok((outcome, TrainReport { results, summaries }))
}
