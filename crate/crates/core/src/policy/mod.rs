//! Policies: CommNet and DNN actors, scheme assembly and epsilon-greedy
//! selection.

mod commnet;
mod exploration;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{flops_count, Network, NeuralError};

pub use commnet::{peer_mean, ActorGradients, ActorNetworks, CommRule, JointTape, PolicyArchitecture};
pub use exploration::{argmax, select_actions, EpsilonSchedule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("expected {expected} agents, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("a CommNet agent needs at least one peer")]
    SingleAgentComm,
    #[error("agents disagree on batch size")]
    BatchMismatch,
    #[error("unknown scheme {0:?} (expected proposed, comp1 or comp2)")]
    UnknownScheme(alloc::string::String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    CommNet,
    Dnn,
}

/// Assignment of policy kinds to agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// The leader runs CommNet, everyone else runs DNN.
    Proposed,
    /// Every agent runs CommNet.
    Comp1,
    /// Every agent runs DNN.
    Comp2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Comp1, Scheme::Comp2];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Comp1 => "comp1",
            Scheme::Comp2 => "comp2",
        }
    }

    pub fn kind_of(self, agent: usize, leader: usize) -> PolicyKind {
        match self {
            Scheme::Proposed if agent == leader => PolicyKind::CommNet,
            Scheme::Proposed => PolicyKind::Dnn,
            Scheme::Comp1 => PolicyKind::CommNet,
            Scheme::Comp2 => PolicyKind::Dnn,
        }
    }

    pub fn kinds(self, agents: usize, leader: usize) -> Vec<PolicyKind> {
        (0..agents).map(|m| self.kind_of(m, leader)).collect()
    }

    pub fn uses(self, kind: PolicyKind) -> bool {
        match self {
            Scheme::Proposed => true,
            Scheme::Comp1 => kind == PolicyKind::CommNet,
            Scheme::Comp2 => kind == PolicyKind::Dnn,
        }
    }

    /// Per-step scheme cost from per-policy forward costs.
    pub fn total_flops(self, commnet: u64, dnn: u64, agents: usize) -> u64 {
        let m = agents as u64;
        match self {
            Scheme::Proposed => commnet + (m.saturating_sub(1)) * dnn,
            Scheme::Comp1 => m * commnet,
            Scheme::Comp2 => m * dnn,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "comp1" => Ok(Scheme::Comp1),
            "comp2" => Ok(Scheme::Comp2),
            _ => Err(PolicyError::UnknownScheme(s.into())),
        }
    }
}

/// Agent slot order with the leader first, then the rest by index.
pub fn leader_first(agents: usize, leader: usize) -> Vec<usize> {
    core::iter::once(leader).chain((0..agents).filter(|&m| m != leader)).collect()
}

/// Per-policy and per-scheme forward-pass FLOPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeFlops {
    pub commnet: u64,
    pub dnn: u64,
    pub agents: usize,
}

impl SchemeFlops {
    pub fn from_costs(commnet: u64, dnn: u64, agents: usize) -> Self {
        Self { commnet, dnn, agents }
    }

    /// Costs of a policy network: with its communication mixes for CommNet,
    /// without for DNN.
    pub fn from_network(net: &Network, comm_layers: usize, agents: usize) -> Self {
        Self {
            commnet: flops_count(net, comm_layers, agents),
            dnn: flops_count(net, 0, agents),
            agents,
        }
    }

    pub fn total(&self, scheme: Scheme) -> u64 {
        scheme.total_flops(self.commnet, self.dnn, self.agents)
    }
}
