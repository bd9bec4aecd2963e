use anyhow::{bail, Context, Result};

use esa_core::approx::{Checkpoint, Mlp};
use esa_core::esa::{scan_filtered_q, ScanRow};
use esa_core::trace::CsvTable;

use crate::config::ExperimentConfig;
use crate::output::Writer;
use crate::svg::{Panel, Series};
use crate::Outcome;

/// Sweep the checkpoint's Q-network along one action dimension at a state.
pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    let s = cfg.scan.as_ref().context("scan-q needs a [scan] table")?;
    let env = cfg.env.context("scan-q needs an env")?;
    if !s.checkpoint.is_file() {
        bail!("checkpoint {} does not exist", s.checkpoint.display());
    }
    let ck = Checkpoint::load(&s.checkpoint)?;
    let q: &Mlp = ck.net("q")?;
    let mut e = env.make();
    let spec = e.spec().clone();
    let state = match &s.state {
        Some(st) => st.clone(),
        None => e.reset(cfg.seeds[0]),
    };
    if state.len() != spec.obs_dim || q.input_dim() != spec.obs_dim + spec.action_dim {
        bail!("checkpoint / state shapes do not match env {}", env.name());
    }
    let center = match (&s.a_center, ck.nets.get("policy_mean")) {
        (Some(a), _) => a.clone(),
        (None, Some(pi)) => pi.forward(&state)?,
        (None, None) => vec![0.0; spec.action_dim],
    };
    if center.len() != spec.action_dim {
        bail!("a_center must have {} entries", spec.action_dim);
    }
    let mut input = state.clone();
    input.extend_from_slice(&center);
    let qf = |a: &[f64]| {
        let mut x = input.clone();
        x[spec.obs_dim..].copy_from_slice(a);
        q.forward(&x).map_or(f64::NAN, |o| o[0])
    };
    Ok(scan_filtered_q(qf, &center, s.dim, s.half_width, s.steps, s.hp_cutoff)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<ScanRow>)> {
    let rows = compute(cfg)?;
    let mut w = Writer::create(cfg)?;
    let mut t = CsvTable::new(["a", "q_raw", "q_filtered"]);
    for r in &rows {
        t.push_f64(&[r.a, r.q_raw, r.q_filtered]);
    }
    w.csv("scan_q.csv", t)?;
    let mut raw = Panel::new("Q along the action", "action", "Q");
    raw.push(Series::new("raw", rows.iter().map(|r| (r.a, r.q_raw)).collect()));
    raw.push(Series::new("high-pass filtered", rows.iter().map(|r| (r.a, r.q_filtered)).collect()));
    w.text("plot_scan_q.svg", &crate::svg::render(&[raw]))?;
    let outcome = Outcome { out_dir: w.dir.clone(), files: w.files, failures: Vec::new() };
    Ok((outcome, rows))
}
