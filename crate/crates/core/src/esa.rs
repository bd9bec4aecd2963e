//! Extremum-seeking action selection.
//!
//! Each environment step, the sampled action is probed with a sinusoidal
//! offset against a Q-function and an action correction `v` is adapted from
//! the high-pass filtered response (no low-pass stage):
//!
//! ```text
//! u      = v + K sin(w t dt)
//! q      = Q(s, a_sampled + u)
//! v_i   <- v_i + alpha_i K_i sin(w_i t dt) HP_i[q]
//! apply    clip(a_sampled + v)
//! ```
//!
//! `v`, `t` and the filters reset at every episode start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esc::DEFAULT_CUTOFF_RATIO;
use crate::filters::FilterState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    None,
    /// `alpha * max(0, 1 - iteration / end_iter)`
    Linear { end_iter: usize },
    /// `alpha * rate^iteration`
    Exponential { rate: f64 },
}

impl Decay {
    pub fn factor(&self, iteration: usize) -> f64 {
        match *self {
            Decay::None => 1.0,
            Decay::Linear { end_iter } => {
                if end_iter == 0 {
                    0.0
                } else {
                    (1.0 - iteration as f64 / end_iter as f64).max(0.0)
                }
            }
            Decay::Exponential { rate } => rate.powi(iteration.min(i32::MAX as usize) as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsaConfig {
    pub k: Vec<f64>,
    /// Frequencies in rad per unit of `dt`.
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Time step used in the sinusoid argument (the env step by default).
    pub dt: f64,
    /// High-pass cutoffs; `omega / 5` when absent.
    #[serde(default)]
    pub hp_cutoff: Option<Vec<f64>>,
    pub decay: Decay,
    /// Bound on `|v|_inf` in action units.
    pub v_clip: f64,
    /// Divide Q by a running scale before filtering.
    #[serde(default = "default_true")]
    pub normalize_q: bool,
}

fn default_true() -> bool {
    true
}

impl EsaConfig {
    /// Uniform amplitude / rate, frequencies `w_base * (1 + i/n)`, and the
    /// default clip `0.5 * 0.25 * min(action span)`.
    pub fn uniform(action_span: &[f64], k: f64, omega_base: f64, alpha: f64, dt: f64, decay: Decay) -> Self {
        let n = action_span.len();
        let span = action_span.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            k: vec![k; n],
            omega: crate::esc::default_frequencies(n, omega_base),
            alpha: vec![alpha; n],
            dt,
            hp_cutoff: None,
            decay,
            v_clip: 0.5 * span * 0.25,
            normalize_q: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.k.len();
        if n == 0 {
            return Err(Error::InvalidParam("ESA needs at least one action dimension".into()));
        }
        for (name, len) in [("esa.omega", self.omega.len()), ("esa.alpha", self.alpha.len())] {
            if len != n {
                return Err(Error::Shape { context: name, expected: n, got: len });
            }
        }
        if self.k.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidParam("ESA amplitudes K must be > 0".into()));
        }
        if self.omega.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParam("ESA frequencies must be > 0".into()));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParam("ESA learning rates must be finite".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.omega[i] == self.omega[j] {
                    return Err(Error::InvalidParam("ESA frequencies must be distinct".into()));
                }
            }
        }
        if !(self.v_clip > 0.0) {
            return Err(Error::InvalidParam("ESA v_clip must be > 0".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParam("ESA dt must be > 0".into()));
        }
        if let Some(c) = &self.hp_cutoff {
            if c.len() != n {
                return Err(Error::Shape { context: "esa.hp_cutoff", expected: n, got: c.len() });
            }
        }
        if let Decay::Exponential { rate } = self.decay {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::InvalidParam("exponential decay rate must be in (0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn hp_cutoffs(&self) -> Vec<f64> {
        self.hp_cutoff
            .clone()
            .unwrap_or_else(|| self.omega.iter().map(|w| w / DEFAULT_CUTOFF_RATIO).collect())
    }

    /// Whether the hook can ever move an action.
    pub fn is_identity(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }
}

/// Copy of `config` with `alpha` scaled by the decay schedule at `iteration`.
pub fn decay_alpha(config: &EsaConfig, iteration: usize) -> EsaConfig {
    let f = config.decay.factor(iteration);
    let mut out = config.clone();
    out.alpha.iter_mut().for_each(|a| *a *= f);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Action to send to the environment (within bounds).
    pub applied: Vec<f64>,
    /// `a_sampled + v` before clipping to the bounds.
    pub shifted: Vec<f64>,
    pub probe: Vec<f64>,
    pub q_raw: f64,
    pub q_filtered: f64,
}

#[derive(Debug, Clone)]
pub struct EsaEpisodeState {
    config: EsaConfig,
    v: Vec<f64>,
    t: usize,
    hp: Vec<FilterState>,
    q_queries: usize,
    skipped: usize,
}

impl EsaEpisodeState {
    /// `config` should already carry the decayed `alpha` for this iteration.
    pub fn new(config: EsaConfig) -> Result<Self> {
        config.validate()?;
        let hp = config
            .hp_cutoffs()
            .into_iter()
            .map(|c| FilterState::high_pass(c, config.dt))
            .collect::<Result<Vec<_>>>()?;
        let n = config.dim();
        Ok(Self { config, v: vec![0.0; n], t: 0, hp, q_queries: 0, skipped: 0 })
    }

    pub fn config(&self) -> &EsaConfig {
        &self.config
    }

    /// Replace the config (e.g. with a freshly decayed alpha) keeping the episode state.
    pub fn set_alpha(&mut self, alpha: &[f64]) {
        self.config.alpha.copy_from_slice(alpha);
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Total Q evaluations issued since construction.
    pub fn q_queries(&self) -> usize {
        self.q_queries
    }

    /// Steps whose Q value was non-finite and therefore skipped.
    pub fn skipped_updates(&self) -> usize {
        self.skipped
    }

    pub fn reset_episode(&mut self) {
        self.v.iter_mut().for_each(|v| *v = 0.0);
        self.t = 0;
        self.hp.iter_mut().for_each(FilterState::reset);
    }

    fn phase(&self, i: usize) -> f64 {
        (self.config.omega[i] * self.t as f64 * self.config.dt).sin()
    }

    /// One ESA step: a single query `q(a_sampled + u)`, an update of `v`,
    /// and the corrected action clipped to `[low, high]`.
    ///
    /// `q_scale` divides the raw Q value before filtering when
    /// `normalize_q` is set.
    pub fn select(
        &mut self,
        a_sampled: &[f64],
        low: &[f64],
        high: &[f64],
        q_scale: f64,
        mut q: impl FnMut(&[f64]) -> f64,
    ) -> Result<Selection> {
        let n = self.v.len();
        if a_sampled.len() != n {
            return Err(Error::Shape { context: "ESA action", expected: n, got: a_sampled.len() });
        }
        let sines: Vec<f64> = (0..n).map(|i| self.phase(i)).collect();
        let probe: Vec<f64> = (0..n).map(|i| self.v[i] + self.config.k[i] * sines[i]).collect();
        let query: Vec<f64> = a_sampled.iter().zip(&probe).map(|(a, u)| a + u).collect();
        let q_raw = q(&query);
        self.q_queries += 1;
        let scale = if self.config.normalize_q && q_scale.is_finite() && q_scale > 0.0 { q_scale } else { 1.0 };
        let qn = q_raw / scale;
        let mut q_filtered = f64::NAN;
        if qn.is_finite() {
            for i in 0..n {
                let h = self.hp[i].step(qn)?;
                if i == 0 {
                    q_filtered = h;
                }
                let dv = self.config.alpha[i] * self.config.k[i] * sines[i] * h;
                self.v[i] = (self.v[i] + dv).clamp(-self.config.v_clip, self.config.v_clip);
            }
        } else {
            self.skipped += 1;
        }
        self.t += 1;
        let shifted: Vec<f64> = a_sampled.iter().zip(&self.v).map(|(a, v)| a + v).collect();
        let applied = shifted
            .iter()
            .zip(low.iter().zip(high))
            .map(|(x, (l, h))| x.clamp(*l, *h))
            .collect();
        Ok(Selection { applied, shifted, probe, q_raw, q_filtered })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub a: f64,
    pub q_raw: f64,
    pub q_filtered: f64,
}

/// Sweep action dimension `dim` over `[center - half_width, center + half_width]`
/// in `steps` ordered points, feeding Q through a fresh high-pass filter
/// (cutoff in rad per sweep step).
pub fn scan_filtered_q(
    q: impl Fn(&[f64]) -> f64,
    a_center: &[f64],
    dim: usize,
    half_width: f64,
    steps: usize,
    hp_cutoff: f64,
) -> Result<Vec<ScanRow>> {
    if dim >= a_center.len() {
        return Err(Error::InvalidParam(format!("scan dimension {dim} out of range")));
    }
    if steps < 2 {
        return Err(Error::InvalidParam("scan needs at least two points".into()));
    }
    let mut hp = FilterState::high_pass(hp_cutoff, 1.0)?;
    let mut a = a_center.to_vec();
    let lo = a_center[dim] - half_width;
    let da = 2.0 * half_width / (steps - 1) as f64;
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        a[dim] = lo + k as f64 * da;
        let q_raw = q(&a);
        let q_filtered = if q_raw.is_finite() { hp.step(q_raw)? } else { f64::NAN };
        rows.push(ScanRow { a: a[dim], q_raw, q_filtered });
    }
    Ok(rows)
}
