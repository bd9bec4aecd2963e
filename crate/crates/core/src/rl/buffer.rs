use super::gae::{gae_with_dones, normalize};
use crate::error::{Error, Result};

/// One environment step as recorded for the update.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Action actually applied (`a_sampled + v` under ESA, before bound clipping).
    pub action: Vec<f64>,
    /// Action whose log-probability enters the importance ratio.
    pub policy_action: Vec<f64>,
    /// Behavior log-probability of `policy_action`.
    pub logp: f64,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    /// Value estimate of `obs` at collection time.
    pub value: f64,
}

/// Transitions of one rollout in collection order. After [`RolloutBuffer::close`]
/// it also holds returns and per-batch normalized advantages.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    closed: bool,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.closed = false;
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Compute GAE returns and normalized advantages. `last_value` bootstraps
    /// the final transition when it is not terminal.
    pub fn close(&mut self, gamma: f64, lambda: f64, last_value: f64) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let rewards: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (mut adv, ret) = gae_with_dones(&rewards, &values, &dones, last_value, gamma, lambda);
        normalize(&mut adv);
        self.advantages = adv;
        self.returns = ret;
        self.closed = true;
        Ok(())
    }

    /// Mark closed with caller-provided advantages and returns (used by tests
    /// and synthetic regression data).
    pub fn close_with(&mut self, advantages: Vec<f64>, returns: Vec<f64>) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        for (name, len) in [("advantages", advantages.len()), ("returns", returns.len())] {
            if len != self.transitions.len() {
                return Err(Error::Shape { context: name, expected: self.transitions.len(), got: len });
            }
        }
        self.advantages = advantages;
        self.returns = returns;
        self.closed = true;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.advantages.clear();
        self.returns.clear();
        self.closed = false;
    }
}
