use anyhow::{Context, Result};

use esa_core::esa::Decay;

use super::runs::{run_jobs, write_all, Job, JobResult};
use super::train::TrainReport;
use crate::config::{ExperimentConfig, SweepParam};
use crate::output::Writer;
use crate::Outcome;

/// File-name-safe label of one sweep setting.
pub fn setting_label(param: SweepParam, value: f64, decay: Option<&Decay>) -> String {
    match (param, decay) {
        (SweepParam::K, _) => format!("k{value}"),
        (SweepParam::Omega, _) => format!("omega{:.4}", value),
        (SweepParam::Decay, Some(Decay::None)) | (SweepParam::Decay, None) => "decay-none".into(),
        (SweepParam::Decay, Some(Decay::Linear { end_iter })) => format!("decay-linear{end_iter}"),
        (SweepParam::Decay, Some(Decay::Exponential { rate })) => format!("decay-exp{rate}"),
    }
}

/// One ESA variant per setting of the swept hyperparameter, others held at `[esa]`.
pub fn run(cfg: &ExperimentConfig) -> Result<(Outcome, TrainReport)> {
    let env = cfg.env.context("ablation needs an env")?;
    let base = cfg.esa.as_ref().context("ablation needs an [esa] table")?;
    let sweep = cfg.ablation.as_ref().context("ablation needs an [ablation] table")?;
    let mut settings = Vec::new();
    match sweep.param {
        SweepParam::K | SweepParam::Omega => {
            for &v in &sweep.values {
                let mut s = base.clone();
                if sweep.param == SweepParam::K {
                    s.k = v;
                } else {
                    s.omega = v;
                }
                settings.push((setting_label(sweep.param, v, None), s));
            }
        }
        SweepParam::Decay => {
            for d in &sweep.decays {
                let mut s = base.clone();
                s.decay = *d;
                settings.push((setting_label(sweep.param, 0.0, Some(d)), s));
            }
        }
    }
    let mut w = Writer::create(cfg)?;
    let mut jobs = Vec::new();
    for (label, s) in &settings {
        let esa = s.resolve(env);
        esa.validate()?;
        for &seed in &cfg.seeds {
            jobs.push(Job { variant: label.clone(), seed, esa: Some(esa.clone()) });
        }
    }
    let results = run_jobs(env, &cfg.rl, &jobs);
    let variants: Vec<String> = settings.iter().map(|(l, _)| l.clone()).collect();
    let title = format!("{} on {}", cfg.name, env.name());
    let summaries = write_all(&mut w, &results, &variants, None, "plot_ablation.svg", &title)?;
    let failures = results.iter().filter_map(JobResult::failure).collect();
    let outcome = Outcome { out_dir: w.dir.clone(), files: w.files, failures };
    Ok((outcome, TrainReport { results, summaries }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_distinct() {
        let a = setting_label(SweepParam::K, 0.1, None);
        let b = setting_label(SweepParam::K, 0.2, None);
        assert_ne!(a, b);
        assert_eq!(setting_label(SweepParam::Decay, 0.0, Some(&Decay::Exponential { rate: 0.99 })), "decay-exp0.99");
    }
}
