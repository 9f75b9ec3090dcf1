//! Policy network, rollouts and REINFORCE training.
//!
//! The network has three layers: the state (window of word vectors plus a
//! one-hot of the previous action), a middle layer chosen by
//! [`Architecture`], and a softmax over the three labels. Gradients are
//! derived by hand for each architecture and checked against finite
//! differences by [`grad_check`].

mod io;
mod linalg;
mod lstm;
mod network;
mod reinforce;
mod rollout;
mod train;

pub use io::{load_policy, policy_from_bytes, policy_to_bytes, save_policy, POLICY_MAGIC, POLICY_VERSION};
pub use network::{init_policy, ActionDistribution, Architecture, PolicyContext, PolicyParams, N_ACTIONS};
pub use reinforce::{grad_check, reinforce_update, Baseline, BaselineKind, TrainConfig, UpdateStats};
pub use rollout::{greedy_actions, rollout, Episode, RolloutMode};
pub use train::{train, EpochRecord, TrainOutcome};
