use rand_distr::{Distribution, StandardNormal};

use super::mlp::{Mlp, Workspace};
use crate::error::{Error, Result};
use crate::Rng;

pub const MIN_LOG_STD: f64 = -6.907_755_278_982_137; // ln(1e-3)
pub const MAX_LOG_STD: f64 = 2.302_585_092_994_046; // ln(10)

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian policy: state-dependent mean, state-independent log std.
///
/// The trainable parameter vector is `[mean_net params..., log_std...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean_net: Mlp, log_std: Vec<f64>) -> Result<Self> {
        if log_std.len() != mean_net.output_dim() {
            return Err(Error::Shape { context: "log_std", expected: mean_net.output_dim(), got: log_std.len() });
        }
        let mut p = Self { mean_net, log_std };
        p.clamp_log_std();
        Ok(p)
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.mean_net.param_count() + self.log_std.len()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = self.mean_net.params().to_vec();
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape { context: "policy params", expected: self.param_count(), got: flat.len() });
        }
        let n = self.mean_net.param_count();
        self.mean_net.params_mut().copy_from_slice(&flat[..n]);
        self.log_std.copy_from_slice(&flat[n..]);
        self.clamp_log_std();
        Ok(())
    }

    /// Apply `f` to the flat parameter vector in place, then re-project log std.
    pub fn update_params(&mut self, f: impl FnOnce(&mut [f64], &mut [f64])) {
        f(self.mean_net.params_mut(), &mut self.log_std);
        self.clamp_log_std();
    }

    fn clamp_log_std(&mut self) {
        for l in &mut self.log_std {
            *l = l.clamp(MIN_LOG_STD, MAX_LOG_STD);
        }
    }

    pub fn mean(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.mean_net.forward(s)
    }

    pub fn sample(&self, s: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let mu = self.mean(s)?;
        Ok(mu
            .iter()
            .zip(&self.log_std)
            .map(|(m, l)| {
                let z: f64 = StandardNormal.sample(rng);
                m + l.exp() * z
            })
            .collect())
    }

    /// Log density of `a` given the already computed mean.
    pub fn log_prob_from_mean(&self, mean: &[f64], a: &[f64]) -> f64 {
        mean.iter()
            .zip(a)
            .zip(&self.log_std)
            .map(|((m, a), l)| {
                let z = (a - m) / l.exp();
                -0.5 * z * z - l - HALF_LN_2PI
            })
            .sum()
    }

    pub fn log_prob(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        if a.len() != self.action_dim() {
            return Err(Error::Shape { context: "action", expected: self.action_dim(), got: a.len() });
        }
        Ok(self.log_prob_from_mean(&self.mean(s)?, a))
    }

    /// Forward the mean network into `ws` and return `log pi(a|s)`.
    pub fn log_prob_ws(&self, s: &[f64], a: &[f64], ws: &mut Workspace) -> Result<f64> {
        let mean = self.mean_net.forward_ws(s, ws)?;
        Ok(self.log_prob_from_mean(mean, a))
    }

    /// Adds `scale * grad log pi(a|s)` into `grad` (flat layout), using the
    /// activations left in `ws` by [`GaussianPolicy::log_prob_ws`].
    pub fn accumulate_log_prob_grad_ws(
        &self,
        a: &[f64],
        scale: f64,
        ws: &mut Workspace,
        upstream: &mut Vec<f64>,
        grad: &mut [f64],
    ) -> Result<()> {
        let n = self.mean_net.param_count();
        upstream.clear();
        for (i, ((m, a), l)) in ws.output().iter().zip(a).zip(&self.log_std).enumerate() {
            let inv_var = (-2.0 * l).exp();
            let d = a - m;
            upstream.push(scale * d * inv_var);
            grad[n + i] += scale * (d * d * inv_var - 1.0);
        }
        self.mean_net.accumulate_backward(ws, upstream, &mut grad[..n], None)
    }

    /// Adds `scale * grad log pi(a|s)` into `grad` and returns `log pi(a|s)`.
    pub fn accumulate_log_prob_grad(
        &self,
        s: &[f64],
        a: &[f64],
        scale: f64,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> Result<f64> {
        if a.len() != self.action_dim() {
            return Err(Error::Shape { context: "action", expected: self.action_dim(), got: a.len() });
        }
        let logp = self.log_prob_ws(s, a, ws)?;
        let mut upstream = Vec::with_capacity(a.len());
        self.accumulate_log_prob_grad_ws(a, scale, ws, &mut upstream, grad)?;
        Ok(logp)
    }

    /// Entropy of the diagonal Gaussian (state independent).
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|l| l + 0.5 + HALF_LN_2PI).sum()
    }
}
