use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Action;

/// Linear epsilon annealing per parameter update, floored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub anneal_per_update: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 0.3,
            anneal_per_update: 0.0001,
            floor: 0.01,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, update_count: u64) -> f64 {
        (self.initial - self.anneal_per_update * update_count as f64).max(self.floor)
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy joint action selection: per agent, a uniform random
/// action with probability `epsilon`, otherwise the distribution's argmax.
pub fn select_actions<D: AsRef<[f64]>, R: Rng + ?Sized>(distributions: &[D], epsilon: f64, rng: &mut R) -> Vec<Action> {
    distributions
        .iter()
        .map(|d| {
            let explore = rng.random::<f64>() < epsilon;
            let index = if explore {
                rng.random_range(0..Action::COUNT)
            } else {
                argmax(d.as_ref())
            };
            Action::from_index(index).expect("distribution width matches the action count")
        })
        .collect()
}
