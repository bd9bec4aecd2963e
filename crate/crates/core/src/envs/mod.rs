//! Desk-scale continuous-control environments.
//!
//! Both environments are deterministic given the reset seed and never
//! terminate early: an episode ends exactly at `max_episode_steps`.

mod pendulum;
mod point_mass;

pub use pendulum::{wrap_angle, Pendulum};
pub use point_mass::{PathKind, PointMass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::CsvTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub obs_dim: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub dt: f64,
    pub max_episode_steps: usize,
    pub gamma: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.action_low.len() != self.action_dim || self.action_high.len() != self.action_dim {
            return Err(Error::Shape { context: "action bounds", expected: self.action_dim, got: self.action_low.len() });
        }
        if self.action_low.iter().zip(&self.action_high).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidParam("action_low must be < action_high".into()));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::InvalidParam("max_episode_steps must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParam("gamma must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn clip_action(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(x, (l, h))| x.clamp(*l, *h))
            .collect()
    }

    pub fn action_span(&self) -> Vec<f64> {
        self.action_high.iter().zip(&self.action_low).map(|(h, l)| h - l).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Start a new episode; identical seeds give identical observations.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advance one step. The action is clipped to the bounds before integration.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;

    /// Physical state, for episode logs.
    fn state(&self) -> Vec<f64>;

    fn steps_taken(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Pendulum,
    PointMassCircle,
    PointMassEight,
}

impl EnvKind {
    pub fn make(self) -> Box<dyn Env> {
        match self {
            EnvKind::Pendulum => Box::new(Pendulum::new()),
            EnvKind::PointMassCircle => Box::new(PointMass::new(PathKind::Circle)),
            EnvKind::PointMassEight => Box::new(PointMass::new(PathKind::FigureEight)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::PointMassCircle => "point_mass_circle",
            EnvKind::PointMassEight => "point_mass_eight",
        }
    }

    /// Trailing-mean return treated as "solved" for steps-to-threshold.
    pub fn return_threshold(self) -> f64 {
        match self {
            EnvKind::Pendulum => -300.0,
            EnvKind::PointMassCircle | EnvKind::PointMassEight => -30.0,
        }
    }
}

/// Replay `actions` from `reset(seed)` and tabulate `step, state..., action..., reward`.
/// Stops early if the episode ends.
pub fn episode_log(env: &mut dyn Env, seed: u64, actions: &[Vec<f64>]) -> Result<CsvTable> {
    env.reset(seed);
    let n_state = env.state().len();
    let n_act = env.spec().action_dim;
    let mut header = vec!["step".to_string()];
    header.extend((1..=n_state).map(|i| format!("state_{i}")));
    header.extend((1..=n_act).map(|i| format!("action_{i}")));
    header.push("reward".into());
    let mut table = CsvTable::new(header);
    for (k, a) in actions.iter().enumerate() {
        let state = env.state();
        let out = env.step(a)?;
        let mut row = vec![k as f64];
        row.extend(state);
        row.extend(env.spec().clip_action(a));
        row.push(out.reward);
        table.push_f64(&row);
        if out.done {
            break;
        }
    }
    Ok(table)
}

fn check_action(spec: &EnvSpec, a: &[f64]) -> Result<Vec<f64>> {
    if a.len() != spec.action_dim {
        return Err(Error::Shape { context: "env action", expected: spec.action_dim, got: a.len() });
    }
    if let Some(&bad) = a.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "env action", value: bad });
    }
    Ok(spec.clip_action(a))
}
