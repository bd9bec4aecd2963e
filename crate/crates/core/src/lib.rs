//! Extremum-seeking control (ESC) as a zeroth-order optimizer, and
//! extremum-seeking action selection (ESA) as an add-on to on-policy
//! policy optimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`filters`]: first-order discrete high-pass / low-pass filters.
//! - [`esc`]: the multi-dimensional ESC loop and its trace.
//! - [`baselines`]: search-gradient and analytic gradient descent comparators.
//! - [`approx`]: small MLPs with manual backprop, the Gaussian policy head, Adam.
//! - [`envs`]: pendulum swing-up and a 2-D point-mass path tracker.
//! - [`rl`]: rollout buffer, GAE, clipped-surrogate updates and the training loop.
//! - [`esa`]: the per-step action-selection hook that probes a Q-network.
//!
//! Work that is embarrassingly parallel (seed matrices, Monte Carlo batches,
//! sweeps) goes through [`exec`], which uses rayon when the `parallel`
//! feature is on and falls back to plain iteration otherwise. Results are
//! identical either way.

pub mod approx;
pub mod baselines;
pub mod envs;
pub mod error;
pub mod esa;
pub mod esc;
pub mod exec;
pub mod filters;
pub mod rl;
pub mod stats;
pub mod trace;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used everywhere in the crate. ChaCha keeps streams reproducible across platforms.
pub type Rng = ChaCha8Rng;

/// Derive an independent RNG stream from a base seed and a stream tag.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
