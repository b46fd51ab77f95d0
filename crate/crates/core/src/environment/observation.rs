//! Per-agent observation vectors.
//!
//! Layout for agent `m`, in order:
//!
//! | slots       | content                                                      |
//! |-------------|--------------------------------------------------------------|
//! | 2           | own position / field size                                    |
//! | 3 * (M - 1) | other agents (index order, self skipped): dx, dy, distance   |
//! | 3 * N       | users: dx, dy, distance                                      |
//! | 3 * K       | non-agent UAVs: dx, dy, distance                             |
//! | 2           | last-step aviation and surveillance energy / energy norm     |
//! | 2           | coverage radius / max radius, resolution index / (I - 1)     |
//! | 1           | users assigned to this agent / N                             |
//! | 1           | operating flag                                               |
//!
//! Offsets are divided by the field size and distances by the field
//! diagonal, so every entry lies in `[-1, 1]`.

use alloc::vec::Vec;
use core::ops::Deref;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::geometry::{distance, Position};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn observation_len(agents: usize, users: usize, non_agents: usize) -> usize {
    2 + 3 * (agents - 1) + 3 * users + 3 * non_agents + 6
}

pub(super) fn observe(env: &Environment, m: usize) -> Observation {
    let cfg = env.config();
    let state = env.state();
    let size = cfg.field_size;
    let diagonal = cfg.field().diagonal();
    let me = &state.agents[m];
    let mut v = Vec::with_capacity(cfg.observation_len());

    v.push(me.position.x / size);
    v.push(me.position.y / size);
    let mut relative = |other: Position| {
        v.push((other.x - me.position.x) / size);
        v.push((other.y - me.position.y) / size);
        v.push(distance(me.position, other) / diagonal);
    };
    for (k, other) in state.agents.iter().enumerate() {
        if k != m {
            relative(other.position);
        }
    }
    for user in &state.users {
        relative(user.position);
    }
    for uav in &state.non_agents {
        relative(uav.position);
    }

    let e_norm = cfg.energy_norm();
    v.push(me.energy.e_b / e_norm);
    v.push(me.energy.e_c / e_norm);
    let resolutions = env.resolutions();
    v.push(resolutions.radius(me.level) / resolutions.max_radius());
    let top = resolutions.len() - 1;
    v.push(if top == 0 { 0.0 } else { me.level.index as f64 / top as f64 });
    v.push(env.association().row_count(m) as f64 / cfg.users as f64);
    v.push(if me.operating { 1.0 } else { 0.0 });
    Observation(v)
}
