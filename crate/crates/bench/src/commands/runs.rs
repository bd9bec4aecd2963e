use std::collections::BTreeMap;

use anyhow::Result;
use serde_json::json;

use esa_core::approx::Checkpoint;
use esa_core::envs::EnvKind;
use esa_core::esa::EsaConfig;
use esa_core::exec;
use esa_core::rl::{train, RlConfig, TrainOutput};
use esa_core::stats;
use esa_core::trace::{fmt_f64, CsvTable};

use crate::output::{curve_file, Writer};
use crate::svg::{Panel, Series};

#[derive(Debug, Clone)]
pub struct Job {
    pub variant: String,
    pub seed: u64,
    pub esa: Option<EsaConfig>,
}

#[derive(Debug)]
pub struct JobResult {
    pub variant: String,
    pub seed: u64,
    pub output: std::result::Result<TrainOutput, String>,
}

impl JobResult {
    pub fn failure(&self) -> Option<String> {
        match &self.output {
            Err(e) => Some(format!("{} seed {}: {e}", self.variant, self.seed)),
            Ok(o) => o.aborted.as_ref().map(|r| format!("{} seed {}: {r}", self.variant, self.seed)),
        }
    }
}

/// Per-variant aggregates over seeds. Runs that never reach the threshold
/// count as infinitely many steps.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: String,
    pub seeds: usize,
    pub reached: usize,
    pub median_steps: f64,
    pub median_final: f64,
    pub mean_iteration_s: f64,
    pub mean_rollout_s: f64,
}

/// Run every job; seeds execute concurrently up to `ESA_THREADS`.
pub fn run_jobs(env: EnvKind, rl: &RlConfig, jobs: &[Job]) -> Vec<JobResult> {
    exec::with_threads(crate::thread_cap(), || {
        exec::par_map(jobs, |j| JobResult {
            variant: j.variant.clone(),
            seed: j.seed,
            output: train(env, rl, j.esa.as_ref(), j.seed).map_err(|e| e.to_string()),
        })
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

pub fn curve_table(out: &TrainOutput) -> CsvTable {
    let esa = out.curve.first().is_some_and(|r| r.mean_abs_v.is_some());
    let mut header = vec![
        "iteration",
        "env_steps",
        "episodes",
        "mean_return",
        "std_return",
        "trailing_return",
        "approx_kl",
        "clip_fraction",
    ];
    if esa {
        header.extend(["mean_abs_v", "mean_abs_q_filtered"]);
    }
    let mut t = CsvTable::new(header);
    for r in &out.curve {
        let mut row = vec![
            r.iteration.to_string(),
            r.env_steps.to_string(),
            r.episodes.to_string(),
            fmt_f64(r.mean_return),
            fmt_f64(r.std_return),
            fmt_f64(r.trailing_return),
            fmt_f64(r.approx_kl),
            fmt_f64(r.clip_fraction),
        ];
        if esa {
            row.push(opt(r.mean_abs_v));
            row.push(opt(r.mean_abs_q_filtered));
        }
        t.push_row(row);
    }
    t
}

pub fn checkpoint(out: &TrainOutput) -> Checkpoint {
    let mut c = Checkpoint::new();
    c.meta.insert("env".into(), out.env.name().into());
    c.meta.insert("seed".into(), out.seed.to_string());
    c.meta.insert("env_steps".into(), out.env_steps.to_string());
    c.nets.insert("policy_mean".into(), out.agent.policy.mean_net.clone());
    c.nets.insert("value".into(), out.agent.value.clone());
    c.nets.insert("q".into(), out.agent.q.clone());
    c.vectors.insert("log_std".into(), out.agent.policy.log_std().to_vec());
    c
}

fn median_inf(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else if v[n / 2].is_infinite() {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summarize(results: &[JobResult], variants: &[String]) -> Vec<VariantSummary> {
    variants
        .iter()
        .map(|v| {
            let runs: Vec<&TrainOutput> =
                results.iter().filter(|r| &r.variant == v).filter_map(|r| r.output.as_ref().ok()).collect();
            let steps: Vec<f64> =
                runs.iter().map(|o| o.steps_to_threshold().map_or(f64::INFINITY, |s| s as f64)).collect();
            let finals: Vec<f64> = runs.iter().map(|o| o.final_return()).filter(|x| x.is_finite()).collect();
            let iters: Vec<f64> = runs.iter().flat_map(|o| o.timing.iter().map(|t| t.total())).collect();
            let rollouts: Vec<f64> = runs.iter().flat_map(|o| o.timing.iter().map(|t| t.rollout_s)).collect();
            VariantSummary {
                variant: v.clone(),
                seeds: runs.len(),
                reached: steps.iter().filter(|s| s.is_finite()).count(),
                median_steps: median_inf(&steps),
                median_final: if finals.is_empty() { f64::NAN } else { stats::median(&finals) },
                mean_iteration_s: if iters.is_empty() { f64::NAN } else { stats::mean(&iters) },
                mean_rollout_s: if rollouts.is_empty() { f64::NAN } else { stats::mean(&rollouts) },
            }
        })
        .collect()
}

/// Per-run rows followed by per-variant median rows. Wall-clock is kept out
/// of this table (see `timing.json`) so that it stays reproducible.
pub fn summary_table(results: &[JobResult], summaries: &[VariantSummary]) -> CsvTable {
    let mut t = CsvTable::new(["variant", "seed", "steps_to_threshold", "final_return", "env_steps", "q_queries", "status"]);
    for r in results {
        let row = match &r.output {
            Ok(o) => vec![
                r.variant.clone(),
                r.seed.to_string(),
                o.steps_to_threshold().map_or_else(|| "inf".into(), |s| s.to_string()),
                fmt_f64(o.final_return()),
                o.env_steps.to_string(),
                o.q_queries.to_string(),
                if o.aborted.is_some() { "aborted".into() } else { "ok".into() },
            ],
            Err(_) => vec![r.variant.clone(), r.seed.to_string(), "inf".into(), "NaN".into(), "0".into(), "0".into(), "error".into()],
        };
        t.push_row(row);
    }
    for s in summaries {
        t.push_row(vec![
            s.variant.clone(),
            "median".into(),
            fmt_f64(s.median_steps),
            fmt_f64(s.median_final),
            String::new(),
            String::new(),
            format!("reached {}/{}", s.reached, s.seeds),
        ]);
    }
    t
}

pub fn timing_json(summaries: &[VariantSummary], baseline: Option<&str>) -> String {
    let mut variants = BTreeMap::new();
    for s in summaries {
        variants.insert(
            s.variant.clone(),
            json!({ "mean_iteration_s": s.mean_iteration_s, "mean_rollout_s": s.mean_rollout_s }),
        );
    }
    let mut ratios = BTreeMap::new();
    if let Some(b) = baseline.and_then(|b| summaries.iter().find(|s| s.variant == b)) {
        for s in summaries.iter().filter(|s| s.variant != b.variant) {
            ratios.insert(
                s.variant.clone(),
                json!({
                    "iteration": s.mean_iteration_s / b.mean_iteration_s,
                    "rollout": s.mean_rollout_s / b.mean_rollout_s,
                }),
            );
        }
    }
    let doc = json!({ "variants": variants, "wall_clock_ratio_vs_baseline": ratios });
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

/// Median and interquartile band of the trailing return across seeds, per iteration.
pub fn median_band(results: &[JobResult], variant: &str) -> Series {
    let runs: Vec<&TrainOutput> =
        results.iter().filter(|r| r.variant == variant).filter_map(|r| r.output.as_ref().ok()).collect();
    let len = runs.iter().map(|o| o.curve.len()).max().unwrap_or(0);
    let mut points = Vec::new();
    let mut band = Vec::new();
    for i in 0..len {
        let vals: Vec<f64> = runs
            .iter()
            .filter_map(|o| o.curve.get(i))
            .map(|r| r.trailing_return)
            .filter(|x| x.is_finite())
            .collect();
        let Some(x) = runs.iter().find_map(|o| o.curve.get(i)).map(|r| r.env_steps as f64) else { continue };
        if vals.is_empty() {
            continue;
        }
        points.push((x, stats::median(&vals)));
        band.push((x, stats::quantile(&vals, 0.25), stats::quantile(&vals, 0.75)));
    }
    Series::new(variant, points).with_band(band)
}

/// Write curves, checkpoints, summary, timing and the comparison plot.
pub fn write_all(
    w: &mut Writer,
    results: &[JobResult],
    variants: &[String],
    baseline: Option<&str>,
    plot_name: &str,
    title: &str,
) -> Result<Vec<VariantSummary>> {
    for r in results {
        if let Ok(o) = &r.output {
            w.csv(&curve_file(&r.variant, r.seed), curve_table(o))?;
            let path = w.path(&format!("checkpoint_{}_{}.txt", r.variant, r.seed));
            checkpoint(o).save(&path)?;
            w.files.push(path);
        }
    }
    let summaries = summarize(results, variants);
    w.csv("summary.csv", summary_table(results, &summaries))?;
    w.text("timing.json", &timing_json(&summaries, baseline))?;
    let mut panel = Panel::new(title, "environment steps", "trailing mean return (median, IQR)");
    for v in variants {
        panel.push(median_band(results, v));
    }
    w.text(plot_name, &crate::svg::render(&[panel]))?;
    Ok(summaries)
}
