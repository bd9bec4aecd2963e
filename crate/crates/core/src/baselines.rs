//! Comparators for ESC on static / time-varying objectives: the search
//! gradient (a Gaussian sampling distribution adapted along the
//! score-function estimate of its expected objective) and plain gradient
//! descent with analytic gradients.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::esc::{Objective, Quadratic, Trace, TraceRow};
use crate::exec;
use crate::Rng;

/// Diagonal Gaussian `N(mu, diag(sigma^2))` over the input space.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDist {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SearchDist {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::Shape { context: "search sigma", expected: mu.len(), got: sigma.len() });
        }
        if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParam("search sigma must be > 0".into()));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParam("search mean must be finite".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `grad_mu log p(u) = (u - mu) / sigma^2`
    pub fn score(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((u, m), s)| (u - m) / (s * s))
            .collect()
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.sigma)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

/// Monte Carlo estimate of `grad_mu E[J]` from `batch` samples.
///
/// With `batch >= 2` the batch mean of `J` is subtracted and the sum is
/// normalized by `batch - 1`, which equals the leave-one-out baseline and
/// keeps the estimate unbiased. A single sample has no baseline.
pub fn search_gradient_estimate<O: Objective + ?Sized>(
    dist: &SearchDist,
    objective: &O,
    time: f64,
    batch: usize,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    if batch == 0 {
        return Err(Error::InvalidParam("search-gradient batch must be >= 1".into()));
    }
    if objective.dim() != dist.dim() {
        return Err(Error::Shape { context: "search objective", expected: dist.dim(), got: objective.dim() });
    }
    let samples: Vec<Vec<f64>> = (0..batch).map(|_| dist.sample(rng)).collect();
    let values = exec::par_map(&samples, |u| objective.eval(u, time));
    if let Some(&bad) = values.iter().find(|j| !j.is_finite()) {
        return Err(Error::NonFinite { context: "search-gradient objective", value: bad });
    }
    let mean_j = values.iter().sum::<f64>() / batch as f64;
    let (baseline, norm) = if batch == 1 { (0.0, 1.0) } else { (mean_j, (batch - 1) as f64) };
    let mut grad = vec![0.0; dist.dim()];
    for (u, j) in samples.iter().zip(&values) {
        for (g, s) in grad.iter_mut().zip(dist.score(u)) {
            *g += (j - baseline) * s;
        }
    }
    grad.iter_mut().for_each(|g| *g /= norm);
    Ok((grad, mean_j))
}

/// One mean-only descent step `mu <- mu - lr * g_hat`; sigma stays fixed.
pub fn search_gradient_step<O: Objective + ?Sized>(
    dist: &SearchDist,
    objective: &O,
    time: f64,
    batch: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<SearchDist> {
    let (grad, _) = search_gradient_estimate(dist, objective, time, batch, rng)?;
    let mu = dist.mu.iter().zip(&grad).map(|(m, g)| m - lr * g).collect();
    Ok(SearchDist { mu, sigma: dist.sigma.clone() })
}

/// Iterate [`search_gradient_step`]; iteration `k` sees the objective at time `k * dt`.
///
/// Rows record `mu` in the `v` columns, the first sample of the batch as `u`
/// and the batch-mean objective as `j`.
pub fn run_search_gradient<O: Objective + ?Sized>(
    dist0: &SearchDist,
    objective: &O,
    batch: usize,
    lr: f64,
    iterations: usize,
    dt: f64,
    rng: &mut Rng,
) -> Result<Trace> {
    let mut dist = dist0.clone();
    let mut trace = Trace::default();
    for k in 0..iterations {
        let time = k as f64 * dt;
        // Peek the first sample without disturbing the stream.
        let first = dist.sample(&mut rng.clone());
        let (grad, mean_j) = search_gradient_estimate(&dist, objective, time, batch, rng)?;
        trace.push(
            TraceRow { step: k, time, u: first, v: dist.mu.clone(), j: mean_j },
            (k + 1) * batch,
        );
        for (m, g) in dist.mu.iter_mut().zip(&grad) {
            *m -= lr * g;
        }
        if dist.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Divergence { step: k, value: f64::NAN });
        }
    }
    Ok(trace)
}

/// `u - lr * grad`
pub fn analytic_gd_step(u: &[f64], grad: &[f64], lr: f64) -> Vec<f64> {
    u.iter().zip(grad).map(|(u, g)| u - lr * g).collect()
}

/// Gradient descent on a quadratic with its closed-form gradient (one "query" per step).
pub fn run_analytic_gd(objective: &Quadratic, u0: &[f64], lr: f64, iterations: usize, dt: f64) -> Trace {
    let mut u = u0.to_vec();
    let mut trace = Trace::default();
    for k in 0..iterations {
        let time = k as f64 * dt;
        let j = objective.eval(&u, time);
        trace.push(TraceRow { step: k, time, u: u.clone(), v: u.clone(), j }, k + 1);
        u = analytic_gd_step(&u, &objective.gradient(&u, time), lr);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;

    #[test]
    fn score_at_mean_is_zero() {
        let d = SearchDist::new(vec![0.3, -1.0], vec![0.5, 2.0]).unwrap();
        assert_eq!(d.score(&[0.3, -1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn gd_step_arithmetic() {
        let q = Quadratic::sum_of_squares(vec![0.1, 0.5]);
        let u = analytic_gd_step(&[2.0, 2.0], &q.gradient(&[2.0, 2.0], 0.0), 0.1);
        assert!((u[0] - 1.62).abs() < 1e-12 && (u[1] - 1.70).abs() < 1e-12);
    }

    #[test]
    fn gd_zero_gradient_is_stationary() {
        assert_eq!(analytic_gd_step(&[1.0, 2.0], &[0.0, 0.0], 0.7), vec![1.0, 2.0]);
    }

    #[test]
    fn gd_reaches_tolerance_within_100_steps() {
        // error contracts by exactly 0.8 per step: 2.4 * 0.8^k < 1e-3 at k = 35
        let q = Quadratic::sum_of_squares(vec![0.1, 0.5]);
        let trace = run_analytic_gd(&q, &[2.0, 2.0], 0.1, 100, 0.0);
        let hit = trace.queries_until(|r| r.j < 1e-6).expect("GD must converge");
        assert!(hit <= 100);
        assert!(trace.rows.last().unwrap().j < 1e-6);
    }

    #[test]
    fn zero_batch_is_rejected() {
        let q = Quadratic::sum_of_squares(vec![0.0]);
        let d = SearchDist::new(vec![1.0], vec![0.1]).unwrap();
        let mut rng = rng_stream(0, 0);
        assert!(search_gradient_step(&d, &q, 0.0, 0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn non_finite_objective_is_rejected() {
        let f = crate::esc::FnObjective::new(1, |_u: &[f64], _t| f64::INFINITY);
        let d = SearchDist::new(vec![1.0], vec![0.1]).unwrap();
        let mut rng = rng_stream(0, 0);
        assert!(search_gradient_step(&d, &f, 0.0, 4, 0.1, &mut rng).is_err());
    }

    #[test]
    fn large_batch_matches_closed_form_gradient() {
        // E[(u - c)^2] = (mu - c)^2 + sigma^2  =>  grad = 2 (mu - c)
        let c = 0.4;
        let q = Quadratic::sum_of_squares(vec![c]);
        let d = SearchDist::new(vec![1.3], vec![0.1]).unwrap();
        let mut rng = rng_stream(11, 0);
        let (g, _) = search_gradient_estimate(&d, &q, 0.0, 100_000, &mut rng).unwrap();
        let exact = 2.0 * (1.3 - c);
        assert!(((g[0] - exact) / exact).abs() < 0.05, "g = {} exact = {exact}", g[0]);
    }

    #[test]
    fn invalid_dist_rejected() {
        assert!(SearchDist::new(vec![0.0], vec![0.0]).is_err());
        assert!(SearchDist::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
