//! Deep Q-learning for the object-steering agents.

pub mod dqn;
pub mod nn;
pub mod replay;
pub mod surrogate;

use thiserror::Error;

pub use dqn::{act_all, build_state, reward, select_action, Action, DqnAgent, PolicyController, TrainConfig};
pub use nn::{Adam, Mlp};
pub use replay::{ReplayBuffer, Transition};
pub use surrogate::{random_policy_baseline, train_surrogate, EpisodeStat, SurrogateEnv};

#[derive(Debug, Error, PartialEq)]
pub enum RlError {
    #[error("training diverged: non-finite loss")]
    NonFiniteLoss,
    #[error("invalid reward input: {0}")]
    Reward(String),
    #[error("{0}")]
    Weights(String),
    #[error("invalid train config: {0}")]
    Config(String),
}
