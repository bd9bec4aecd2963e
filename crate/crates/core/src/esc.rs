//! Extremum-seeking control loop.
//!
//! The applied input oscillates around the estimate,
//! `u_i(t) = v_i(t) + K_i sin(w_i t dt)`, and the estimate follows the
//! filtered, demodulated response of the objective:
//!
//! ```text
//! h_i = HP_i[J(u)]
//! l_i = LP_i[sin(w_i t dt) * h_i]
//! v_i <- v_i + sign * alpha_i * l_i * dt      (sign = -1 minimizing, +1 maximizing)
//! ```
//!
//! Near a strict local optimum `u*` the error `v - u*` then decays like
//! `exp(-0.5 * alpha * K * J''(u*) * time)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterState;

/// Ratio between perturbation frequency and the default filter cutoffs.
pub const DEFAULT_CUTOFF_RATIO: f64 = 5.0;

/// `w_i = base * (1 + i / n)`: distinct per-dimension frequencies.
pub fn default_frequencies(dim: usize, base: f64) -> Vec<f64> {
    (0..dim)
        .map(|i| base * (1.0 + i as f64 / dim as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscParams {
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    pub dt: f64,
    #[serde(default)]
    pub maximize: bool,
    /// Per-dimension high-pass cutoffs; `omega / 5` when absent.
    #[serde(default)]
    pub hp_cutoff: Option<Vec<f64>>,
    /// Per-dimension low-pass cutoffs; `omega / 5` when absent.
    #[serde(default)]
    pub lp_cutoff: Option<Vec<f64>>,
}

impl EscParams {
    pub fn new(k: Vec<f64>, omega: Vec<f64>, alpha: Vec<f64>, dt: f64) -> Result<Self> {
        let p = Self {
            k,
            omega,
            alpha,
            dt,
            maximize: false,
            hp_cutoff: None,
            lp_cutoff: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same amplitude and learning rate on every axis, frequencies from [`default_frequencies`].
    pub fn uniform(dim: usize, k: f64, omega_base: f64, alpha: f64, dt: f64) -> Result<Self> {
        Self::new(
            vec![k; dim],
            default_frequencies(dim, omega_base),
            vec![alpha; dim],
            dt,
        )
    }

    pub fn maximizing(mut self, maximize: bool) -> Self {
        self.maximize = maximize;
        self
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.k.len();
        if n == 0 {
            return Err(Error::InvalidParam("ESC dimension must be positive".into()));
        }
        for (name, len) in [("omega", self.omega.len()), ("alpha", self.alpha.len())] {
            if len != n {
                return Err(Error::Shape { context: name, expected: n, got: len });
            }
        }
        if self.k.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidParam("ESC amplitudes K must be > 0".into()));
        }
        if self.omega.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParam("ESC frequencies must be > 0".into()));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParam("ESC learning rates must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParam("ESC dt must be > 0".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.omega[i] == self.omega[j] {
                    return Err(Error::InvalidParam(format!(
                        "ESC frequencies must be distinct (dims {i} and {j})"
                    )));
                }
            }
        }
        for (name, c) in [("hp_cutoff", &self.hp_cutoff), ("lp_cutoff", &self.lp_cutoff)] {
            if let Some(c) = c {
                if c.len() != n {
                    return Err(Error::Shape { context: name, expected: n, got: c.len() });
                }
            }
        }
        Ok(())
    }

    fn cutoffs(&self, explicit: &Option<Vec<f64>>) -> Vec<f64> {
        match explicit {
            Some(c) => c.clone(),
            None => self.omega.iter().map(|w| w / DEFAULT_CUTOFF_RATIO).collect(),
        }
    }
}

/// An objective `J(u, time)`, possibly time-varying.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, u: &[f64], time: f64) -> f64;

    /// Ground-truth optimizer, when known (tests and plots only).
    fn optimum(&self, _time: f64) -> Option<Vec<f64>> {
        None
    }
}

/// `J(u) = 0.5 * sum_i h_i (u_i - c_i)^2`, plus an optional constant drift of the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Quadratic {
    /// `sum_i (u_i - c_i)^2`, i.e. curvature 2 on every axis.
    pub fn sum_of_squares(center: Vec<f64>) -> Self {
        let n = center.len();
        Self { center, curvature: vec![2.0; n], velocity: vec![0.0; n] }
    }

    pub fn with_curvature(center: Vec<f64>, curvature: Vec<f64>) -> Self {
        let n = center.len();
        Self { center, curvature, velocity: vec![0.0; n] }
    }

    /// `sum_i (u_i - velocity_i * time)^2`
    pub fn moving(velocity: Vec<f64>) -> Self {
        let n = velocity.len();
        Self { center: vec![0.0; n], curvature: vec![2.0; n], velocity }
    }

    pub fn center_at(&self, time: f64) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.velocity)
            .map(|(c, v)| c + v * time)
            .collect()
    }

    pub fn gradient(&self, u: &[f64], time: f64) -> Vec<f64> {
        let c = self.center_at(time);
        u.iter()
            .zip(&c)
            .zip(&self.curvature)
            .map(|((u, c), h)| h * (u - c))
            .collect()
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, u: &[f64], time: f64) -> f64 {
        u.iter()
            .zip(&self.center)
            .zip(&self.velocity)
            .zip(&self.curvature)
            .map(|(((u, c), v), h)| {
                let d = u - (c + v * time);
                0.5 * h * d * d
            })
            .sum()
    }

    fn optimum(&self, time: f64) -> Option<Vec<f64>> {
        Some(self.center_at(time))
    }
}

/// Objective backed by a closure.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], f64) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], f64) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[f64], time: f64) -> f64 {
        (self.f)(u, time)
    }
}

/// Wraps an objective and counts every evaluation.
pub struct CountingObjective<'a, O: ?Sized> {
    inner: &'a O,
    queries: AtomicUsize,
}

impl<'a, O: Objective + ?Sized> CountingObjective<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self { inner, queries: AtomicUsize::new(0) }
    }

    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }
}

impl<O: Objective + ?Sized> Objective for CountingObjective<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, u: &[f64], time: f64) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(u, time)
    }

    fn optimum(&self, time: f64) -> Option<Vec<f64>> {
        self.inner.optimum(time)
    }
}

#[derive(Debug, Clone)]
pub struct EscState {
    params: EscParams,
    v: Vec<f64>,
    t: usize,
    hp: Vec<FilterState>,
    lp: Vec<FilterState>,
}

impl EscState {
    pub fn new(params: EscParams, v0: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let n = params.dim();
        if v0.len() != n {
            return Err(Error::Shape { context: "ESC initial estimate", expected: n, got: v0.len() });
        }
        if v0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParam("ESC initial estimate must be finite".into()));
        }
        let hp = params
            .cutoffs(&params.hp_cutoff)
            .into_iter()
            .map(|c| FilterState::high_pass(c, params.dt))
            .collect::<Result<Vec<_>>>()?;
        let lp = params
            .cutoffs(&params.lp_cutoff)
            .into_iter()
            .map(|c| FilterState::low_pass(c, params.dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, v: v0, t: 0, hp, lp })
    }

    pub fn params(&self) -> &EscParams {
        &self.params
    }

    pub fn estimate(&self) -> &[f64] {
        &self.v
    }

    pub fn step_count(&self) -> usize {
        self.t
    }

    pub fn time(&self) -> f64 {
        self.t as f64 * self.params.dt
    }

    fn phase(&self, i: usize) -> f64 {
        (self.params.omega[i] * self.time()).sin()
    }

    /// Input to apply at the current step.
    pub fn probe(&self) -> Vec<f64> {
        (0..self.v.len())
            .map(|i| self.v[i] + self.params.k[i] * self.phase(i))
            .collect()
    }

    /// Feed back `J(probe(), time())` and advance one step.
    pub fn update(&mut self, j_value: f64) -> Result<()> {
        if !j_value.is_finite() {
            return Err(Error::Divergence { step: self.t, value: j_value });
        }
        let sign = if self.params.maximize { 1.0 } else { -1.0 };
        for i in 0..self.v.len() {
            let h = self.hp[i].step(j_value)?;
            let m = self.phase(i) * h;
            let l = self.lp[i].step(m)?;
            self.v[i] += sign * self.params.alpha[i] * l * self.params.dt;
        }
        self.t += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub j: f64,
}

/// Full record of an optimizer run, one row per objective query batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Cumulative objective queries after each row.
    pub queries: Vec<usize>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TraceRow, cumulative_queries: usize) {
        self.rows.push(row);
        self.queries.push(cumulative_queries);
    }

    /// Queries used when `pred(v)` first holds, if ever.
    pub fn queries_until(&self, mut pred: impl FnMut(&TraceRow) -> bool) -> Option<usize> {
        self.rows
            .iter()
            .zip(&self.queries)
            .find(|(r, _)| pred(r))
            .map(|(_, q)| *q)
    }
}

/// Iterate probe / evaluate / update for `steps` steps starting from `v0`.
///
/// Row `t` records the estimate before update `t`, the probe `u(t)` and `J(u(t))`,
/// so row 0 holds `v0`.
pub fn run<O: Objective + ?Sized>(
    params: &EscParams,
    objective: &O,
    v0: &[f64],
    steps: usize,
) -> Result<Trace> {
    if steps == 0 {
        return Err(Error::InvalidParam("ESC run needs at least one step".into()));
    }
    if objective.dim() != params.dim() {
        return Err(Error::Shape {
            context: "ESC objective",
            expected: params.dim(),
            got: objective.dim(),
        });
    }
    let mut state = EscState::new(params.clone(), v0.to_vec())?;
    let mut trace = Trace::default();
    for step in 0..steps {
        let u = state.probe();
        let time = state.time();
        let j = objective.eval(&u, time);
        trace.push(
            TraceRow { step, time, u, v: state.estimate().to_vec(), j },
            step + 1,
        );
        state.update(j)?;
    }
    Ok(trace)
}
