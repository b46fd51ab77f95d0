//! JSON Lines episode traces: one header line, then one line per step.

use std::io::{BufRead, Write};

use acr_core::training::policy_actions;
use acr_core::{ActorNetworks, Environment, RewardBreakdown, Scheme};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub scheme: Option<Scheme>,
    pub layout_seed: u64,
    pub dynamics_seed: u64,
    pub field_size: f64,
    pub horizon: usize,
    pub agents: usize,
    pub non_agents: usize,
    pub leader: usize,
    /// Static user positions, `[x, y]`.
    pub users: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub pixels: u32,
    pub operating: bool,
    pub battery_remaining: f64,
    /// Index of the action taken this step.
    pub action: usize,
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAgentRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub malfunctioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationSummary {
    /// Users assigned to each UAV: agents first, then non-agents.
    pub users_per_uav: Vec<usize>,
    pub unassigned: usize,
}

/// State after step `t` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub agents: Vec<AgentRecord>,
    pub non_agents: Vec<NonAgentRecord>,
    pub association: AssociationSummary,
    pub omega: f64,
    pub support_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Line {
    Header(TraceHeader),
    Step(StepRecord),
}

/// Roll out one greedy episode on the layout of `layout_seed` with the
/// malfunction stream of `dynamics_seed`.
pub fn record_episode(
    env: &mut Environment,
    actors: &ActorNetworks,
    scheme: Scheme,
    layout_seed: u64,
    dynamics_seed: u64,
) -> Result<Trajectory, HarnessError> {
    let mut obs = env.reset_with_seeds(layout_seed, dynamics_seed);
    let cfg = env.config().clone();
    let state = env.state();
    let leader = state.leader();
    let header = TraceHeader {
        schema_version: SCHEMA_VERSION,
        scheme: Some(scheme),
        layout_seed,
        dynamics_seed,
        field_size: cfg.field_size,
        horizon: cfg.horizon,
        agents: cfg.agents,
        non_agents: cfg.non_agents,
        leader,
        users: state.users.iter().map(|u| [u.position.x, u.position.y]).collect(),
    };
    // Greedy selection never draws an exploratory action.
    let mut rng = acr_core::seeding::rng_from(layout_seed, acr_core::seeding::tags::EXPLORATION, dynamics_seed);
    let mut steps = Vec::with_capacity(cfg.horizon);
    while !env.is_done() {
        let actions = policy_actions(actors, scheme, &obs, leader, 0.0, &mut rng)?;
        let out = env.step(&actions)?;
        let state = env.state();
        let radii = env.resolutions();
        steps.push(StepRecord {
            t: state.time_step,
            agents: state
                .agents
                .iter()
                .zip(&actions)
                .zip(&out.rewards)
                .map(|((a, action), reward)| AgentRecord {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    radius: radii.radius(a.level),
                    pixels: a.level.pixels,
                    operating: a.operating,
                    battery_remaining: a.energy.battery_remaining(),
                    action: action.index(),
                    reward: *reward,
                })
                .collect(),
            non_agents: state
                .non_agents
                .iter()
                .map(|h| NonAgentRecord {
                    id: h.id,
                    x: h.position.x,
                    y: h.position.y,
                    radius: radii.radius(h.level),
                    malfunctioned: h.malfunctioned,
                })
                .collect(),
            association: AssociationSummary {
                users_per_uav: out.association.row_counts(),
                unassigned: out.association.unassigned_count(),
            },
            omega: out.omega,
            support_rate: out.support_rate,
        });
        obs = out.observations;
    }
    Ok(Trajectory { header, steps })
}

pub fn write_trace<W: Write>(mut w: W, trajectory: &Trajectory) -> Result<(), HarnessError> {
    let io = |e| HarnessError::io("<trace>", e);
    serde_json::to_writer(&mut w, &Line::Header(trajectory.header.clone()))?;
    w.write_all(b"\n").map_err(io)?;
    for step in &trajectory.steps {
        serde_json::to_writer(&mut w, &Line::Step(step.clone()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Trajectory, HarnessError> {
    let mut header = None;
    let mut steps = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io("<trace>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match (serde_json::from_str::<Line>(&line)?, &header) {
            (Line::Header(h), None) if n == 0 => {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(HarnessError::Trace(format!("unsupported schema version {}", h.schema_version)));
                }
                header = Some(h);
            }
            (Line::Header(_), _) => return Err(HarnessError::Trace(format!("line {}: unexpected header", n + 1))),
            (Line::Step(_), None) => return Err(HarnessError::Trace("missing header".into())),
            (Line::Step(s), Some(_)) => {
                if s.t != steps.len() + 1 {
                    return Err(HarnessError::Trace(format!("line {}: step {} out of order", n + 1, s.t)));
                }
                steps.push(s);
            }
        }
    }
    let header = header.ok_or_else(|| HarnessError::Trace("empty trace".into()))?;
    Ok(Trajectory { header, steps })
}
