use esa_core::baselines::{search_gradient_estimate, SearchDist};
use esa_core::esc::Quadratic;
use esa_core::rng_stream;
use esa_core::stats::{mean, std_dev};

fn estimates(batch: usize, reps: usize, seed: u64) -> Vec<f64> {
    let q = Quadratic::sum_of_squares(vec![0.4]);
    let d = SearchDist::new(vec![1.0], vec![0.3]).unwrap();
    let mut rng = rng_stream(seed, 0);
    (0..reps).map(|_| search_gradient_estimate(&d, &q, 0.0, batch, &mut rng).unwrap().0[0]).collect()
}

#[test]
fn batch_one_estimator_is_unbiased() {
    let g = estimates(1, 10_000, 1);
    let exact = 2.0 * (1.0 - 0.4);
    let se = std_dev(&g) / (g.len() as f64).sqrt();
    assert!((mean(&g) - exact).abs() < 3.0 * se, "mean {} exact {exact} se {se}", mean(&g));
}

#[test]
fn baseline_estimator_is_unbiased_for_small_batches() {
    for batch in [2, 10] {
        let g = estimates(batch, 5_000, 2 + batch as u64);
        let exact = 1.2;
        let se = std_dev(&g) / (g.len() as f64).sqrt();
        assert!((mean(&g) - exact).abs() < 3.0 * se, "batch {batch}");
    }
}

#[test]
fn variance_falls_as_inverse_batch() {
    let v10 = std_dev(&estimates(10, 2_000, 3)).powi(2);
    let v1000 = std_dev(&estimates(1000, 200, 4)).powi(2);
    let ratio = v10 / v1000;
    // expected 100, accept a factor-of-two band
    assert!((50.0..=200.0).contains(&ratio), "variance ratio {ratio}");
}
