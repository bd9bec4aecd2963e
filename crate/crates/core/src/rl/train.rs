use std::time::Instant;

use rand::Rng as _;

use super::buffer::{RolloutBuffer, Transition};
use super::ppo::{Agent, LogpMode, RlConfig, UpdateStats};
use crate::envs::EnvKind;
use crate::error::Result;
use crate::esa::{decay_alpha, EsaConfig, EsaEpisodeState};
use crate::{rng_stream, stats};

const TRAILING_EPISODES: usize = 10;
const Q_SCALE_EMA: f64 = 0.9;

/// One learning-curve row per iteration. Returns are in raw (unscaled) reward units.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub env_steps: usize,
    /// Episodes finished during this iteration.
    pub episodes: usize,
    /// Mean / std of the returns of those episodes (NaN when none finished).
    pub mean_return: f64,
    pub std_return: f64,
    /// Mean of the last ten finished episodes so far.
    pub trailing_return: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// ESA diagnostics: mean `|v|_inf` and mean `|HP[q]|` over the rollout.
    pub mean_abs_v: Option<f64>,
    pub mean_abs_q_filtered: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IterTiming {
    pub rollout_s: f64,
    pub update_s: f64,
}

impl IterTiming {
    pub fn total(&self) -> f64 {
        self.rollout_s + self.update_s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub env: EnvKind,
    pub seed: u64,
    pub curve: Vec<CurveRow>,
    pub episode_returns: Vec<f64>,
    /// Wall-clock per iteration; kept apart from the curve so that curves are reproducible.
    pub timing: Vec<IterTiming>,
    pub q_queries: usize,
    pub env_steps: usize,
    pub skipped_q_updates: usize,
    /// Reason the run stopped early, if it did.
    pub aborted: Option<String>,
    pub agent: Agent,
    pub last_stats: UpdateStats,
    /// Largest `|ratio - 1|` at collection time over all iterations.
    pub max_collection_ratio_error: f64,
}

impl TrainOutput {
    pub fn final_return(&self) -> f64 {
        trailing_mean(&self.episode_returns)
    }

    pub fn steps_to_threshold(&self) -> Option<usize> {
        steps_to_threshold(&self.curve, self.env.return_threshold())
    }
}

fn trailing_mean(returns: &[f64]) -> f64 {
    if returns.is_empty() {
        return f64::NAN;
    }
    stats::mean(&returns[returns.len().saturating_sub(TRAILING_EPISODES)..])
}

/// Environment steps at the first iteration whose trailing return reaches `threshold`.
pub fn steps_to_threshold(curve: &[CurveRow], threshold: f64) -> Option<usize> {
    curve.iter().find(|r| r.trailing_return >= threshold).map(|r| r.env_steps)
}

/// Alternate rollout collection (through the ESA hook when `esa` is given)
/// and updates until `cfg.total_steps` environment steps have been taken.
///
/// Random streams of `seed`: 0-2 network init, 3 action noise, 4 episode
/// reset seeds, 5 policy/value minibatch order, 6 Q minibatch order.
/// A non-finite loss stops the run and is reported in `aborted`.
pub fn train(env_kind: EnvKind, cfg: &RlConfig, esa: Option<&EsaConfig>, seed: u64) -> Result<TrainOutput> {
    cfg.validate()?;
    let mut env = env_kind.make();
    let spec = env.spec().clone();
    if let Some(e) = esa {
        e.validate()?;
        if e.dim() != spec.action_dim {
            return Err(crate::Error::Shape { context: "ESA dimension", expected: spec.action_dim, got: e.dim() });
        }
    }
    let gamma = cfg.gamma.unwrap_or(spec.gamma);
    let train_q = cfg.train_q || esa.is_some();
    let mut agent = Agent::new(spec.obs_dim, spec.action_dim, cfg, seed)?;
    let mut act_rng = rng_stream(seed, 3);
    let mut reset_rng = rng_stream(seed, 4);
    let mut shuffle_rng = rng_stream(seed, 5);
    let mut q_shuffle_rng = rng_stream(seed, 6);

    let mut esa_state = esa.map(|e| EsaEpisodeState::new(decay_alpha(e, 0))).transpose()?;
    let mut q_scale = 1.0;

    let mut pws = agent.policy.mean_net.workspace();
    let mut vws = agent.value.workspace();
    let mut qws = agent.q.workspace();
    let mut q_input = Vec::with_capacity(spec.obs_dim + spec.action_dim);

    let mut obs = env.reset(reset_rng.random());
    let mut ep_return = 0.0;
    let mut out = TrainOutput {
        env: env_kind,
        seed,
        curve: Vec::new(),
        episode_returns: Vec::new(),
        timing: Vec::new(),
        q_queries: 0,
        env_steps: 0,
        skipped_q_updates: 0,
        aborted: None,
        agent: agent.clone(),
        last_stats: UpdateStats::default(),
        max_collection_ratio_error: 0.0,
    };
    let mut buf = RolloutBuffer::new();
    let iterations = cfg.iterations();

    for iteration in 0..iterations {
        if cfg.anneal_lr {
            agent.set_lr_fraction(cfg, 1.0 - iteration as f64 / iterations as f64);
        }
        if let (Some(state), Some(e)) = (esa_state.as_mut(), esa) {
            state.set_alpha(&decay_alpha(e, iteration).alpha);
        }
        let t0 = Instant::now();
        buf.clear();
        let steps = cfg.rollout_steps.min(cfg.total_steps - out.env_steps);
        let episodes_before = out.episode_returns.len();
        let (mut sum_v, mut sum_qf) = (0.0, 0.0);

        for _ in 0..steps {
            let mean = agent.policy.mean_net.forward_ws(&obs, &mut pws)?.to_vec();
            let sampled: Vec<f64> = mean
                .iter()
                .zip(agent.policy.std())
                .map(|(m, s)| m + s * act_rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let (action, applied) = match esa_state.as_mut() {
                Some(state) => {
                    let sel = {
                        let (q, input, ws, s) = (&agent, &mut q_input, &mut qws, &obs);
                        state.select(&sampled, &spec.action_low, &spec.action_high, q_scale, |a| {
                            q.q_of(s, a, input, ws).unwrap_or(f64::NAN)
                        })?
                    };
                    sum_v += state.v().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if sel.q_filtered.is_finite() {
                        sum_qf += sel.q_filtered.abs();
                    }
                    (sel.shifted, sel.applied)
                }
                None => {
                    let applied = spec.clip_action(&sampled);
                    (sampled.clone(), applied)
                }
            };
            let policy_action = match cfg.logp_mode {
                LogpMode::Applied => action.clone(),
                LogpMode::Sampled => sampled,
            };
            let logp = agent.policy.log_prob_from_mean(&mean, &policy_action);
            let value = agent.value_of(&obs, &mut vws)?;
            let step = env.step(&applied)?;
            ep_return += step.reward;
            out.env_steps += 1;
            let done = step.done;
            buf.push(Transition {
                obs: std::mem::replace(&mut obs, step.obs),
                action,
                policy_action,
                logp,
                reward: step.reward * cfg.reward_scale,
                next_obs: obs.clone(),
                done,
                value,
            });
            if done {
                out.episode_returns.push(ep_return);
                ep_return = 0.0;
                obs = env.reset(reset_rng.random());
                if let Some(state) = esa_state.as_mut() {
                    state.reset_episode();
                }
            }
        }
        let last_value = agent.value_of(&obs, &mut vws)?;
        buf.close(gamma, cfg.lambda, last_value)?;
        let rollout_s = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let stats = match agent.update(&buf, cfg, train_q, &mut shuffle_rng, &mut q_shuffle_rng) {
            Ok(s) => s,
            Err(e) => {
                out.aborted = Some(format!("iteration {iteration}: {e}"));
                out.timing.push(IterTiming { rollout_s, update_s: t1.elapsed().as_secs_f64() });
                break;
            }
        };
        if train_q {
            let iqr = stats::iqr(&buf.returns);
            if iqr.is_finite() && iqr > 0.0 {
                q_scale = if iteration == 0 { iqr } else { Q_SCALE_EMA * q_scale + (1.0 - Q_SCALE_EMA) * iqr };
            }
        }
        out.timing.push(IterTiming { rollout_s, update_s: t1.elapsed().as_secs_f64() });
        out.last_stats = stats;
        out.max_collection_ratio_error = out.max_collection_ratio_error.max(stats.initial_ratio_error);

        let fresh = &out.episode_returns[episodes_before..];
        let (mean_return, std_return) =
            if fresh.is_empty() { (f64::NAN, f64::NAN) } else { (stats::mean(fresh), stats::std_dev(fresh)) };
        out.curve.push(CurveRow {
            iteration,
            env_steps: out.env_steps,
            episodes: fresh.len(),
            mean_return,
            std_return,
            trailing_return: trailing_mean(&out.episode_returns),
            approx_kl: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
            mean_abs_v: esa_state.as_ref().map(|_| sum_v / steps as f64),
            mean_abs_q_filtered: esa_state.as_ref().map(|_| sum_qf / steps as f64),
        });
    }
    if let Some(state) = esa_state.as_ref() {
        out.q_queries = state.q_queries();
        out.skipped_q_updates = state.skipped_updates();
    }
    out.agent = agent;
    Ok(out)
}
