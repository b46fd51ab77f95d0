//! Off-policy actor-critic training: replay, critic regression to Bellman
//! targets, actor ascent on the critic's expected value, hard target sync.

mod replay;
mod trainer;

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{Action, EnvError, Observation};
use crate::neural::NeuralError;
use crate::policy::{EpsilonSchedule, PolicyError, Scheme};

pub use replay::ReplayBuffer;
pub use trainer::{
    bellman_target, critic_architecture, episode_seed, policy_actions, random_episode, train, train_with,
    RolloutSummary, Trainer, TrainerNetworks,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("requested {requested} samples but the buffer holds {available}")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("transition arity does not match the scenario")]
    Arity,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// One joint step, stored in environment agent order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub states: Vec<Observation>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Observation>,
    pub done: bool,
    /// Index of the leader agent for this episode.
    pub leader: usize,
}

impl Transition {
    pub fn agents(&self) -> usize {
        self.states.len()
    }

    pub fn is_consistent(&self) -> bool {
        let m = self.states.len();
        self.actions.len() == m && self.rewards.len() == m && self.next_states.len() == m && self.leader < m.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    /// Discount factor.
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps between updates once the buffer holds a batch.
    pub update_period: usize,
    /// Updates between hard target copies.
    pub target_sync: u64,
    pub learning_rate: f64,
    /// Global gradient-norm limit per network; 0 disables clipping.
    pub grad_clip: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            batch_size: 32,
            buffer_capacity: 10_000,
            update_period: 1,
            target_sync: 100,
            learning_rate: 1e-3,
            grad_clip: 10.0,
            epsilon: EpsilonSchedule::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::Config(msg.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must hold at least one batch");
        }
        if self.update_period == 0 || self.target_sync == 0 {
            return bad("update_period and target_sync must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.grad_clip >= 0.0) {
            return bad("grad_clip must be non-negative");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.initial) || !(0.0..=1.0).contains(&e.floor) || e.anneal_per_update < 0.0 {
            return bad("epsilon schedule out of range");
        }
        Ok(())
    }
}

/// Per-episode training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub scheme: Scheme,
    /// Sum of `r_total` over the episode, per agent.
    pub total_reward: Vec<f64>,
    pub total_reward_mean: f64,
    /// Mean pre-update critic loss over the episode's updates.
    pub critic_loss: Option<f64>,
    /// Exploration rate after the episode.
    pub epsilon: f64,
    pub support_rate_mean: f64,
    pub omega_mean: f64,
    pub updates: u64,
}
