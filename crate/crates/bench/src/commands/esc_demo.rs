use std::collections::BTreeMap;

use anyhow::Result;

use esa_core::baselines::{run_analytic_gd, run_search_gradient, SearchDist};
use esa_core::esc::{self, EscParams, Objective, Quadratic, Trace};
use esa_core::rng_stream;
use esa_core::trace::{fmt_f64, trace_table, CsvTable};

use crate::config::{EscDemoSettings, ExperimentConfig};
use crate::output::{curve_file, Writer};
use crate::svg::{Panel, Series};
use crate::Outcome;

#[derive(Debug, Clone, Default)]
pub struct EscDemoReport {
    /// Objective queries until `J(v) < level` on the static objective.
    pub esc_static_queries: Option<usize>,
    /// Same for the search gradient, per batch size and seed (in seed order).
    pub sg_static_queries: BTreeMap<usize, Vec<Option<usize>>>,
    pub gd_static_queries: Option<usize>,
    /// `max |v(t) - optimum(t)|` over `t in [4, horizon]` on the moving objective.
    pub esc_tracking_error: f64,
    pub sg_tracking_error: BTreeMap<usize, Vec<f64>>,
    pub esc_static_trace: Trace,
    pub esc_dynamic_trace: Trace,
}

const TRACK_FROM: f64 = 4.0;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `J` at the estimate of every row (not counted as queries).
fn estimate_values(obj: &Quadratic, trace: &Trace) -> Vec<f64> {
    trace.rows.iter().map(|r| obj.eval(&r.v, r.time)).collect()
}

fn queries_to_level(obj: &Quadratic, trace: &Trace, level: f64) -> Option<usize> {
    trace.queries_until(|r| obj.eval(&r.v, r.time) < level)
}

fn tracking_error(obj: &Quadratic, trace: &Trace, from: f64) -> f64 {
    trace
        .rows
        .iter()
        .filter(|r| r.time >= from - 1e-9)
        .map(|r| dist(&r.v, &obj.center_at(r.time)))
        .fold(0.0, f64::max)
}

fn with_estimate_j(obj: &Quadratic, trace: &Trace) -> CsvTable {
    let mut t = trace_table(trace);
    t.header.push("j_estimate".into());
    for (row, j) in t.rows.iter_mut().zip(estimate_values(obj, trace)) {
        row.push(fmt_f64(j));
    }
    t
}

/// Run ESC, the search gradient and analytic gradient descent on the static
/// and the moving quadratic.
pub fn compute(d: &EscDemoSettings, seeds: &[u64]) -> Result<(EscDemoReport, Vec<(String, u64, CsvTable)>)> {
    let dim = d.start.len();
    let stat = Quadratic::sum_of_squares(d.center.clone());
    let moving = Quadratic::moving(d.velocity.clone());
    let mut tables = Vec::new();
    let mut rep = EscDemoReport::default();
    let first = seeds[0];

    let p_static = EscParams::uniform(dim, d.k, d.static_omega, d.static_alpha, d.dt)?;
    let tr = esc::run(&p_static, &stat, &d.start, d.static_steps)?;
    rep.esc_static_queries = queries_to_level(&stat, &tr, d.level);
    tables.push(("esc-static".to_string(), first, with_estimate_j(&stat, &tr)));
    rep.esc_static_trace = tr;

    let dyn_steps = (d.dynamic_horizon / d.dt).round() as usize + 1;
    let p_dyn = EscParams::uniform(dim, d.k, d.dynamic_omega, d.dynamic_alpha, d.dt)?;
    let tr = esc::run(&p_dyn, &moving, &d.start, dyn_steps)?;
    rep.esc_tracking_error = tracking_error(&moving, &tr, TRACK_FROM);
    tables.push(("esc-dynamic".to_string(), first, with_estimate_j(&moving, &tr)));
    rep.esc_dynamic_trace = tr;

    let sd = SearchDist::new(d.start.clone(), vec![d.sg_sigma; dim])?;
    let sg_dt = d.dynamic_horizon / d.sg_iterations as f64;
    for &b in &d.sg_batches {
        for &seed in seeds {
            let mut rng = rng_stream(seed, 100 + b as u64);
            let tr = run_search_gradient(&sd, &stat, b, d.sg_lr, d.sg_iterations, 0.0, &mut rng);
            // a diverging run never reaches the level
            let q = tr.as_ref().ok().and_then(|t| queries_to_level(&stat, t, d.level));
            rep.sg_static_queries.entry(b).or_default().push(q);
            if let Ok(t) = tr {
                tables.push((format!("sg{b}-static"), seed, with_estimate_j(&stat, &t)));
            }

            let mut rng = rng_stream(seed, 200 + b as u64);
            let tr = run_search_gradient(&sd, &moving, b, d.sg_lr, d.sg_iterations + 1, sg_dt, &mut rng);
            let err = tr.as_ref().map_or(f64::INFINITY, |t| tracking_error(&moving, t, TRACK_FROM));
            rep.sg_tracking_error.entry(b).or_default().push(err);
            if let Ok(t) = tr {
                tables.push((format!("sg{b}-dynamic"), seed, with_estimate_j(&moving, &t)));
            }
        }
    }

    let gd = run_analytic_gd(&stat, &d.start, d.gd_lr, d.sg_iterations, 0.0);
    rep.gd_static_queries = queries_to_level(&stat, &gd, d.level);
    tables.push(("gd-static".to_string(), first, with_estimate_j(&stat, &gd)));
    let gd = run_analytic_gd(&moving, &d.start, d.gd_lr, d.sg_iterations + 1, sg_dt);
    tables.push(("gd-dynamic".to_string(), first, with_estimate_j(&moving, &gd)));
    Ok((rep, tables))
}

fn series_from(table: &CsvTable, x: &str, y: &str, label: &str) -> Series {
    let xs = table.column(x).unwrap_or_default();
    let ys = table.column(y).unwrap_or_default();
    Series::new(label, xs.into_iter().zip(ys).collect())
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Outcome, EscDemoReport)> {
    let d = &cfg.esc_demo;
    let (rep, tables) = compute(d, &cfg.seeds)?;
    let mut w = Writer::create(cfg)?;
    let first = cfg.seeds[0];
    let mut static_panel = Panel::new("static objective", "objective queries", "J(estimate)").log_y(true);
    let mut dynamic_panel = Panel::new("moving objective", "time", "J(estimate, t)").log_y(true);
    for (variant, seed, table) in &tables {
        w.csv(&curve_file(variant, *seed), table.clone())?;
        if *seed != first {
            continue;
        }
        if variant.ends_with("-static") {
            if variant.starts_with("esc") {
                // the probe response oscillates around the estimate
                static_panel.push(series_from(table, "queries", "j", "esc-static probe").dashed());
            }
            static_panel.push(series_from(table, "queries", "j_estimate", variant));
        } else {
            dynamic_panel.push(series_from(table, "time", "j_estimate", variant));
        }
    }

    let mut summary = CsvTable::new(["method", "batch", "seed", "queries_to_level", "max_tracking_error_after_4"]);
    let q = |x: Option<usize>| x.map_or_else(|| "inf".to_string(), |v| v.to_string());
    summary.push_row(vec!["esc".into(), "1".into(), first.to_string(), q(rep.esc_static_queries), fmt_f64(rep.esc_tracking_error)]);
    for (b, qs) in &rep.sg_static_queries {
        for ((seed, qv), err) in cfg.seeds.iter().zip(qs).zip(&rep.sg_tracking_error[b]) {
            summary.push_row(vec!["search_gradient".into(), b.to_string(), seed.to_string(), q(*qv), fmt_f64(*err)]);
        }
    }
    summary.push_row(vec!["gradient_descent".into(), "1".into(), first.to_string(), q(rep.gd_static_queries), String::new()]);
    w.csv("summary.csv", summary)?;
    w.text("plot_esc_demo.svg", &crate::svg::render(&[static_panel, dynamic_panel]))?;
    Ok((Outcome { out_dir: w.dir.clone(), files: w.files, failures: Vec::new() }, rep))
}
