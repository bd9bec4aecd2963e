//! On-policy policy optimization with a clipped surrogate, generalized
//! advantage estimation, a value baseline and a Monte-Carlo-fitted
//! Q-network that the ESA hook probes.

mod buffer;
mod gae;
mod ppo;
mod train;

pub use buffer::{RolloutBuffer, Transition};
pub use gae::{gae, gae_with_dones, normalize};
pub use ppo::{ppo_clip_loss, Agent, LogpMode, RlConfig, UpdateStats};
pub use train::{steps_to_threshold, train, CurveRow, IterTiming, TrainOutput};
