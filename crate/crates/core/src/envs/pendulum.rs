use std::f64::consts::PI;

use rand::{Rng as _, SeedableRng};

use super::{check_action, Env, EnvSpec, StepOutcome};
use crate::error::Result;
use crate::Rng;

const G: f64 = 10.0;
const M: f64 = 1.0;
const L: f64 = 1.0;
const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;

/// Wrap to `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Torque-limited pendulum swing-up; `theta = 0` is upright.
///
/// Observation `(cos theta, sin theta, theta_dot)`, torque in `[-2, 2]`,
/// reward `-(wrap(theta)^2 + 0.1 theta_dot^2 + 0.001 u^2)` on the pre-step state.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum".into(),
                obs_dim: 3,
                state_dim: 2,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                dt: 0.05,
                max_episode_steps: 200,
                gamma: 0.99,
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    pub fn with_state(theta: f64, theta_dot: f64) -> Self {
        let mut p = Self::new();
        p.theta = theta;
        p.theta_dot = theta_dot;
        p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_dot(&self) -> f64 {
        self.theta_dot
    }

    pub fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }

    /// `theta_dot^2 / 6 + (g / 2) cos(theta)` for the uniform rod with m = l = 1.
    pub fn energy(&self) -> f64 {
        self.theta_dot * self.theta_dot / 6.0 + 0.5 * G * self.theta.cos()
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::seed_from_u64(seed);
        self.theta = rng.random_range(-PI..PI);
        self.theta_dot = rng.random_range(-1.0..1.0);
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let u = check_action(&self.spec, action)?[0];
        let th = wrap_angle(self.theta);
        let reward = -(th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u);
        let acc = 3.0 * G / (2.0 * L) * self.theta.sin() + 3.0 * u / (M * L * L);
        self.theta_dot = (self.theta_dot + acc * self.spec.dt).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * self.spec.dt;
        self.steps += 1;
        Ok(StepOutcome {
            obs: self.observation(),
            reward,
            done: self.steps >= self.spec.max_episode_steps,
        })
    }

    fn state(&self) -> Vec<f64> {
        vec![self.theta, self.theta_dot]
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
