use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use esa_core::baselines::{search_gradient_estimate, SearchDist};
use esa_core::esc::{self, EscParams, FnObjective};
use esa_core::exec::{par_map, seq_map};
use esa_core::rng_stream;

// A deliberately non-trivial objective so the per-sample cost dominates scheduling.
fn rosenbrock_ish(u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..200 {
        let s = k as f64 * 1e-3;
        acc += (1.0 - u[0] + s).powi(2) + 100.0 * (u[1] - u[0] * u[0]).powi(2) * s.cos();
    }
    acc
}

fn bench_sample_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_batch");
    for &batch in &[10usize, 100, 1000] {
        let points: Vec<Vec<f64>> = (0..batch).map(|i| vec![i as f64 * 1e-3, 0.5]).collect();
        group.bench_with_input(BenchmarkId::new("sequential", batch), &points, |b, p| {
            b.iter(|| seq_map(black_box(p), |u| rosenbrock_ish(u)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", batch), &points, |b, p| {
            b.iter(|| par_map(black_box(p), |u| rosenbrock_ish(u)))
        });
    }
    group.finish();
}

fn bench_search_gradient(c: &mut Criterion) {
    let obj = FnObjective::new(2, |u: &[f64], _t| rosenbrock_ish(u));
    let dist = SearchDist::new(vec![2.0, 2.0], vec![0.1, 0.1]).unwrap();
    c.bench_function("search_gradient_batch_100", |b| {
        let mut rng = rng_stream(0, 0);
        b.iter(|| search_gradient_estimate(&dist, &obj, 0.0, 100, &mut rng).unwrap())
    });
}

fn bench_seed_matrix(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..8).collect();
    let run = |seed: &u64| {
        let obj = esc::Quadratic::sum_of_squares(vec![0.1 + *seed as f64 * 1e-3, 0.5]);
        let params = EscParams::uniform(2, 0.2, 10.0 * std::f64::consts::PI, 10.0, 0.01).unwrap();
        esc::run(&params, &obj, &[2.0, 2.0], 2000).unwrap().rows.len()
    };
    let mut group = c.benchmark_group("esc_seed_matrix");
    group.bench_function("sequential", |b| b.iter(|| seq_map(black_box(&seeds), run)));
    group.bench_function("parallel", |b| b.iter(|| par_map(black_box(&seeds), run)));
    group.finish();
}

criterion_group!(benches, bench_sample_map, bench_search_gradient, bench_seed_matrix);
criterion_main!(benches);
