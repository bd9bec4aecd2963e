use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use crate::approx::{clip_grad_norm, Adam, GaussianPolicy, Mlp, Workspace};
use crate::error::{Error, Result};
use crate::{rng_stream, Rng};

/// Clipped surrogate loss `-min(r A, clip(r, 1-eps, 1+eps) A)`, to be minimized.
pub fn ppo_clip_loss(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    -(ratio * advantage).min(clipped * advantage)
}

/// Which action the stored behavior log-probability refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogpMode {
    /// The action sent to the environment (`a_sampled + v`) is the behavior sample.
    #[default]
    Applied,
    /// The raw policy sample, ignoring the ESA correction.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub hidden: Vec<usize>,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub q_lr: f64,
    /// Discount; the environment's own value when absent.
    pub gamma: Option<f64>,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    /// Passes over the rollout for the Q-network fit.
    pub q_epochs: usize,
    pub minibatch: usize,
    pub rollout_steps: usize,
    pub total_steps: usize,
    pub ent_coef: f64,
    pub max_grad_norm: f64,
    pub init_log_std: f64,
    /// Multiplier applied to rewards before advantage and return computation.
    pub reward_scale: f64,
    pub logp_mode: LogpMode,
    /// Fit the Q-network even without ESA.
    pub train_q: bool,
    /// Linearly anneal the learning rates to zero over the run.
    pub anneal_lr: bool,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            policy_lr: 3e-4,
            value_lr: 1e-3,
            q_lr: 1e-3,
            gamma: None,
            lambda: 0.95,
            clip: 0.2,
            epochs: 10,
            q_epochs: 5,
            minibatch: 64,
            rollout_steps: 2048,
            total_steps: 150_000,
            ent_coef: 0.0,
            max_grad_norm: 0.5,
            init_log_std: 0.0,
            reward_scale: 1.0,
            logp_mode: LogpMode::Applied,
            train_q: false,
            anneal_lr: false,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.to_string()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be non-empty and positive");
        }
        for (name, lr) in [("policy_lr", self.policy_lr), ("value_lr", self.value_lr), ("q_lr", self.q_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(&format!("{name} must be > 0"));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return bad("gamma must lie in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.rollout_steps == 0 || self.total_steps == 0 {
            return bad("epochs, minibatch, rollout_steps and total_steps must be >= 1");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be > 0");
        }
        if !(self.max_grad_norm > 0.0) || self.ent_coef < 0.0 {
            return bad("max_grad_norm must be > 0 and ent_coef >= 0");
        }
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.total_steps.div_ceil(self.rollout_steps)
    }
}

/// Diagnostics of one update, measured on the whole buffer after the last epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub q_loss: f64,
    /// Mean of `logp_old - logp_new`.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
    /// `max |ratio - 1|` over the buffer before the first gradient step.
    pub initial_ratio_error: f64,
}

/// Policy, value and Q networks with their optimizers.
#[derive(Debug, Clone)]
pub struct Agent {
    pub policy: GaussianPolicy,
    pub value: Mlp,
    /// `Q(s, a)` on the concatenated input `[s, a]`.
    pub q: Mlp,
    pub opt_policy: Adam,
    pub opt_value: Adam,
    pub opt_q: Adam,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl Agent {
    /// Networks initialized from independent streams of `seed`, so that
    /// creating or training the Q-network never perturbs the others.
    pub fn new(obs_dim: usize, action_dim: usize, cfg: &RlConfig, seed: u64) -> Result<Self> {
        let mean_net = Mlp::init(&layer_sizes(obs_dim, &cfg.hidden, action_dim), 0.01, &mut rng_stream(seed, 0))?;
        let policy = GaussianPolicy::new(mean_net, vec![cfg.init_log_std; action_dim])?;
        let value = Mlp::init(&layer_sizes(obs_dim, &cfg.hidden, 1), 1.0, &mut rng_stream(seed, 1))?;
        let q = Mlp::init(&layer_sizes(obs_dim + action_dim, &cfg.hidden, 1), 1.0, &mut rng_stream(seed, 2))?;
        Ok(Self {
            opt_policy: Adam::new(policy.param_count(), cfg.policy_lr),
            opt_value: Adam::new(value.param_count(), cfg.value_lr),
            opt_q: Adam::new(q.param_count(), cfg.q_lr),
            policy,
            value,
            q,
        })
    }

    pub fn value_of(&self, s: &[f64], ws: &mut Workspace) -> Result<f64> {
        Ok(self.value.forward_ws(s, ws)?[0])
    }

    /// `Q(s, a)`; `input` is scratch space for the concatenation.
    pub fn q_of(&self, s: &[f64], a: &[f64], input: &mut Vec<f64>, ws: &mut Workspace) -> Result<f64> {
        input.clear();
        input.extend_from_slice(s);
        input.extend_from_slice(a);
        Ok(self.q.forward_ws(input, ws)?[0])
    }

    pub fn set_lr_fraction(&mut self, cfg: &RlConfig, frac: f64) {
        self.opt_policy.lr = cfg.policy_lr * frac;
        self.opt_value.lr = cfg.value_lr * frac;
        self.opt_q.lr = cfg.q_lr * frac;
    }

    /// Minibatch epochs on the clipped surrogate (policy) and squared error
    /// to the buffer returns (value). With `train_q`, the Q-network is fit to
    /// the same returns at the applied actions using its own shuffle stream.
    pub fn update(
        &mut self,
        buf: &RolloutBuffer,
        cfg: &RlConfig,
        train_q: bool,
        shuffle_rng: &mut Rng,
        q_shuffle_rng: &mut Rng,
    ) -> Result<UpdateStats> {
        if buf.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if !buf.is_closed() {
            return Err(Error::InvalidParam("rollout buffer must be closed before the update".into()));
        }
        let n = buf.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut pws = self.policy.mean_net.workspace();
        let mut vws = self.value.workspace();
        let mut upstream = Vec::with_capacity(self.policy.action_dim());
        let mut pgrad = vec![0.0; self.policy.param_count()];
        let mut vgrad = vec![0.0; self.value.param_count()];
        let n_mean = self.policy.mean_net.param_count();
        let eps = cfg.clip;
        let mut initial_ratio_error = 0.0f64;
        for tr in &buf.transitions {
            let logp = self.policy.log_prob_ws(&tr.obs, &tr.policy_action, &mut pws)?;
            initial_ratio_error = initial_ratio_error.max(((logp - tr.logp).exp() - 1.0).abs());
        }

        for _ in 0..cfg.epochs {
            idx.shuffle(shuffle_rng);
            for chunk in idx.chunks(cfg.minibatch) {
                let b = chunk.len() as f64;
                pgrad.iter_mut().for_each(|g| *g = 0.0);
                vgrad.iter_mut().for_each(|g| *g = 0.0);
                for &i in chunk {
                    let tr = &buf.transitions[i];
                    let adv = buf.advantages[i];
                    let logp = self.policy.log_prob_ws(&tr.obs, &tr.policy_action, &mut pws)?;
                    let ratio = (logp - tr.logp).exp();
                    // gradient flows only through the unclipped branch when it is the minimum
                    let active = (adv >= 0.0 && ratio < 1.0 + eps) || (adv < 0.0 && ratio > 1.0 - eps);
                    if active {
                        let scale = -adv * ratio / b;
                        self.policy.accumulate_log_prob_grad_ws(&tr.policy_action, scale, &mut pws, &mut upstream, &mut pgrad)?;
                    }
                    let v = self.value.forward_ws(&tr.obs, &mut vws)?[0];
                    let up = [(v - buf.returns[i]) / b];
                    self.value.accumulate_backward(&mut vws, &up, &mut vgrad, None)?;
                }
                if cfg.ent_coef > 0.0 {
                    pgrad[n_mean..].iter_mut().for_each(|g| *g -= cfg.ent_coef);
                }
                check_grad(&pgrad, "policy gradient")?;
                check_grad(&vgrad, "value gradient")?;
                clip_grad_norm(&mut pgrad, cfg.max_grad_norm);
                clip_grad_norm(&mut vgrad, cfg.max_grad_norm);
                let opt = &mut self.opt_policy;
                self.policy.update_params(|net, log_std| {
                    let mut flat: Vec<f64> = net.iter().chain(log_std.iter()).copied().collect();
                    opt.step(&mut flat, &pgrad);
                    net.copy_from_slice(&flat[..n_mean]);
                    log_std.copy_from_slice(&flat[n_mean..]);
                });
                self.opt_value.step(self.value.params_mut(), &vgrad);
            }
        }

        let q_loss = if train_q { self.fit_q(buf, cfg, q_shuffle_rng)? } else { f64::NAN };

        let mut stats = UpdateStats { q_loss, entropy: self.policy.entropy(), initial_ratio_error, ..Default::default() };
        let mut clipped = 0usize;
        for (i, tr) in buf.transitions.iter().enumerate() {
            let logp = self.policy.log_prob_ws(&tr.obs, &tr.policy_action, &mut pws)?;
            let ratio = (logp - tr.logp).exp();
            stats.policy_loss += ppo_clip_loss(ratio, buf.advantages[i], eps);
            stats.approx_kl += tr.logp - logp;
            if (ratio - 1.0).abs() > eps {
                clipped += 1;
            }
            let v = self.value.forward_ws(&tr.obs, &mut vws)?[0];
            stats.value_loss += 0.5 * (v - buf.returns[i]).powi(2);
        }
        let nf = n as f64;
        stats.policy_loss /= nf;
        stats.value_loss /= nf;
        stats.approx_kl /= nf;
        stats.clip_fraction = clipped as f64 / nf;
        for (what, x) in [("policy loss", stats.policy_loss), ("value loss", stats.value_loss)] {
            if !x.is_finite() {
                return Err(Error::NonFinite { context: what, value: x });
            }
        }
        Ok(stats)
    }

    /// Regress `Q(s, a_applied)` onto the buffer returns; returns the final
    /// mean of `0.5 (Q - target)^2`.
    pub fn fit_q(&mut self, buf: &RolloutBuffer, cfg: &RlConfig, rng: &mut Rng) -> Result<f64> {
        if buf.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let mut ws = self.q.workspace();
        let mut input = Vec::new();
        let mut grad = vec![0.0; self.q.param_count()];
        let mut idx: Vec<usize> = (0..buf.len()).collect();
        for _ in 0..cfg.q_epochs {
            idx.shuffle(rng);
            for chunk in idx.chunks(cfg.minibatch) {
                let b = chunk.len() as f64;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for &i in chunk {
                    let tr = &buf.transitions[i];
                    let q = self.q_of(&tr.obs, &tr.action, &mut input, &mut ws)?;
                    self.q.accumulate_backward(&mut ws, &[(q - buf.returns[i]) / b], &mut grad, None)?;
                }
                check_grad(&grad, "q gradient")?;
                clip_grad_norm(&mut grad, cfg.max_grad_norm);
                self.opt_q.step(self.q.params_mut(), &grad);
            }
        }
        let mut loss = 0.0;
        for (tr, r) in buf.transitions.iter().zip(&buf.returns) {
            loss += 0.5 * (self.q_of(&tr.obs, &tr.action, &mut input, &mut ws)? - r).powi(2);
        }
        let loss = loss / buf.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite { context: "q loss", value: loss });
        }
        Ok(loss)
    }
}

fn check_grad(g: &[f64], context: &'static str) -> Result<()> {
    match g.iter().find(|x| !x.is_finite()) {
        Some(&bad) => Err(Error::NonFinite { context, value: bad }),
        None => Ok(()),
    }
}
