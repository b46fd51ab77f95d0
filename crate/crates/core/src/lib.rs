//! Deterministic multi-UAV surveillance simulation and cooperative
//! multi-agent actor-critic learning.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem (configuration files, checkpoints, traces) lives in the `acr`
//! companion crate.
//!
//! Layout:
//!
//! * [`geometry`]: coverage disks, raster union/exclusive areas, overlap ratio.
//! * [`energy`]: per-step aviation and surveillance energy, battery ledger.
//! * [`environment`]: world state, actions, user association, rewards.
//! * [`neural`]: dense layers, backprop, Xavier init, Adam, FLOPS counting.
//! * [`policy`]: CommNet / DNN actors, scheme assembly, epsilon-greedy.
//! * [`training`]: replay buffer, critic/actor updates, training loop.

#![no_std]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod energy;
pub mod environment;
pub mod geometry;
pub mod neural;
pub mod policy;
pub mod seeding;
pub mod training;

pub use energy::{EnergyError, EnergyLedger, EnergyParams};
pub use environment::{
    Action, AssociationMatrix, EnvError, Environment, Observation, RewardBreakdown,
    ScenarioConfig, StepOutcome, WorldState,
};
pub use geometry::{CoverageDisk, Field, GeometryError, Position, ResolutionLevel, ResolutionSet};
pub use neural::{Activation, Adam, DenseLayer, Gradients, Matrix, Network, NeuralError};
pub use policy::{ActorNetworks, EpsilonSchedule, PolicyError, PolicyKind, Scheme, SchemeFlops};
pub use training::{
    EpisodeMetrics, ReplayBuffer, TrainError, Trainer, TrainerConfig, Transition,
};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
