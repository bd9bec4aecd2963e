use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{check_action, Env, EnvSpec, StepOutcome};
use crate::error::Result;
use crate::Rng;

const ANGULAR_RATE: f64 = 0.5;
const ACTION_COST: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// Unit circle traversed at 0.5 rad/s, starting at (1, 0).
    Circle,
    /// Lemniscate of Bernoulli with unit half-width, same angular parameter rate.
    FigureEight,
    /// Target frozen at a point.
    Fixed([f64; 2]),
}

impl PathKind {
    /// Position, velocity and acceleration of the target at time `t`.
    pub fn target(&self, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let w = ANGULAR_RATE;
        match *self {
            PathKind::Circle => {
                let (s, c) = (w * t).sin_cos();
                ([c, s], [-w * s, w * c], [-w * w * c, -w * w * s])
            }
            PathKind::FigureEight => {
                // x = cos(tau) / (1 + sin^2 tau), y = sin(tau) cos(tau) / (1 + sin^2 tau)
                let pos = |t: f64| {
                    let (s, c) = (w * t).sin_cos();
                    let d = 1.0 + s * s;
                    [c / d, s * c / d]
                };
                // central differences are accurate enough for the feed-forward observation
                let h = 1e-4;
                let (p0, pp, pm) = (pos(t), pos(t + h), pos(t - h));
                let vel = [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)];
                let acc = [
                    (pp[0] - 2.0 * p0[0] + pm[0]) / (h * h),
                    (pp[1] - 2.0 * p0[1] + pm[1]) / (h * h),
                ];
                (p0, vel, acc)
            }
            PathKind::Fixed(p) => (p, [0.0; 2], [0.0; 2]),
        }
    }
}

/// Planar double integrator tracking a moving target.
///
/// Observation: target-minus-position (2), target-minus-velocity (2),
/// target acceleration (2). Reward `-|x - p*|^2 - 0.01 |a|^2` on the
/// post-step position and the post-step target.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    path: PathKind,
    pos: [f64; 2],
    vel: [f64; 2],
    steps: usize,
}

impl PointMass {
    pub fn new(path: PathKind) -> Self {
        let name = match path {
            PathKind::Circle => "point_mass_circle",
            PathKind::FigureEight => "point_mass_eight",
            PathKind::Fixed(_) => "point_mass_fixed",
        };
        Self {
            spec: EnvSpec {
                name: name.into(),
                obs_dim: 6,
                state_dim: 4,
                action_dim: 2,
                action_low: vec![-1.0, -1.0],
                action_high: vec![1.0, 1.0],
                dt: 0.05,
                max_episode_steps: 400,
                gamma: 0.99,
            },
            path,
            pos: [0.0; 2],
            vel: [0.0; 2],
            steps: 0,
        }
    }

    pub fn with_state(path: PathKind, pos: [f64; 2], vel: [f64; 2]) -> Self {
        let mut p = Self::new(path);
        p.pos = pos;
        p.vel = vel;
        p
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.spec.dt
    }

    pub fn path(&self) -> PathKind {
        self.path
    }

    pub fn observation(&self) -> Vec<f64> {
        let (p, v, a) = self.path.target(self.time());
        vec![
            p[0] - self.pos[0],
            p[1] - self.pos[1],
            v[0] - self.vel[0],
            v[1] - self.vel[1],
            a[0],
            a[1],
        ]
    }
}

impl Env for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::seed_from_u64(seed);
        self.pos = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        self.vel = [0.0; 2];
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let a = check_action(&self.spec, action)?;
        let dt = self.spec.dt;
        for i in 0..2 {
            self.pos[i] += self.vel[i] * dt;
            self.vel[i] += a[i] * dt;
        }
        self.steps += 1;
        let (target, _, _) = self.path.target(self.time());
        let err2 = (self.pos[0] - target[0]).powi(2) + (self.pos[1] - target[1]).powi(2);
        let reward = -err2 - ACTION_COST * (a[0] * a[0] + a[1] * a[1]);
        Ok(StepOutcome {
            obs: self.observation(),
            reward,
            done: self.steps >= self.spec.max_episode_steps,
        })
    }

    fn state(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_frozen_target_reward_is_zero() {
        let mut p = PointMass::with_state(PathKind::Fixed([0.3, -0.2]), [0.3, -0.2], [0.0, 0.0]);
        let out = p.step(&[0.0, 0.0]).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(p.state(), vec![0.3, -0.2, 0.0, 0.0]);
    }

    #[test]
    fn reset_is_deterministic_and_in_box() {
        let mut a = PointMass::new(PathKind::Circle);
        let mut b = PointMass::new(PathKind::Circle);
        for seed in 0..100 {
            assert_eq!(a.reset(seed), b.reset(seed));
            let s = a.state();
            assert!(s[0].abs() <= 0.5 && s[1].abs() <= 0.5 && s[2] == 0.0 && s[3] == 0.0);
        }
    }

    #[test]
    fn double_integrator_update() {
        let mut p = PointMass::with_state(PathKind::Fixed([0.0, 0.0]), [1.0, 0.0], [0.5, -1.0]);
        p.step(&[1.0, 0.5]).unwrap();
        let s = p.state();
        assert!((s[0] - 1.025).abs() < 1e-12 && (s[1] + 0.05).abs() < 1e-12);
        assert!((s[2] - 0.55).abs() < 1e-12 && (s[3] + 0.975).abs() < 1e-12);
    }

    #[test]
    fn circle_target_is_on_unit_circle_with_consistent_derivatives() {
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let (p, v, a) = PathKind::Circle.target(t);
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            assert!((v[0].hypot(v[1]) - 0.5).abs() < 1e-12);
            assert!((a[0].hypot(a[1]) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn figure_eight_passes_origin_and_has_finite_derivatives() {
        let (p, v, a) = PathKind::FigureEight.target(std::f64::consts::PI); // tau = pi/2
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
        assert!(v.iter().chain(&a).all(|x| x.is_finite()));
        let (p0, _, _) = PathKind::FigureEight.target(0.0);
        assert!((p0[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_and_nonpositive_reward() {
        let mut p = PointMass::new(PathKind::FigureEight);
        p.reset(3);
        for t in 1..=400 {
            let out = p.step(&[0.2, -0.4]).unwrap();
            assert!(out.reward <= 0.0);
            assert_eq!(out.done, t == 400);
        }
    }
}
