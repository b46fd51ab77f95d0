//! Greedy evaluation on a fixed layout, averaged over malfunction streams.

use acr_core::seeding::{self, tags};
use acr_core::training::policy_actions;
use acr_core::{ActorNetworks, Environment, ScenarioConfig, Scheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// One greedy episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub dynamics_seed: u64,
    /// Mean over agents of the summed `r_total`.
    pub total_reward_mean: f64,
    pub support_rate: Vec<f64>,
    pub omega: Vec<f64>,
    /// `[step][agent]` resolution in pixels.
    pub resolution: Vec<Vec<u32>>,
    /// `[step][uav]` assigned users, agents first.
    pub users_per_uav: Vec<Vec<usize>>,
}

impl IterationResult {
    pub fn support_rate_mean(&self) -> f64 {
        Stat::of(self.support_rate.iter().copied()).mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub iterations: usize,
    pub layout_seed: u64,
    pub seed_stride: u64,
    /// Per-iteration episode means, aggregated over iterations.
    pub support_rate: Stat,
    pub omega: Stat,
    pub total_reward: Stat,
    /// Per-step aggregates over iterations.
    pub support_rate_by_step: Vec<Stat>,
    pub omega_by_step: Vec<Stat>,
    /// `[step][agent]`.
    pub resolution_by_step: Vec<Vec<Stat>>,
    /// `[step][uav]`.
    pub users_per_uav_by_step: Vec<Vec<Stat>>,
    pub runs: Vec<IterationResult>,
}

/// Dynamics seed of evaluation iteration `i`.
pub fn dynamics_seed(seed: u64, stride: u64, i: usize) -> u64 {
    seed.wrapping_add(stride.wrapping_mul(i as u64))
}

fn run_iteration(
    actors: &ActorNetworks,
    scheme: Scheme,
    scenario: &ScenarioConfig,
    seed: u64,
    dynamics: u64,
) -> Result<IterationResult, HarnessError> {
    let mut env = Environment::with_seeds(scenario.clone(), seed, dynamics)?;
    let mut obs = env.observations();
    let leader = env.state().leader();
    let mut rng = seeding::rng_from(seed, tags::EXPLORATION, dynamics);
    let mut totals = vec![0.0; scenario.agents];
    let mut result = IterationResult {
        dynamics_seed: dynamics,
        total_reward_mean: 0.0,
        support_rate: Vec::with_capacity(scenario.horizon),
        omega: Vec::with_capacity(scenario.horizon),
        resolution: Vec::with_capacity(scenario.horizon),
        users_per_uav: Vec::with_capacity(scenario.horizon),
    };
    while !env.is_done() {
        let actions = policy_actions(actors, scheme, &obs, leader, 0.0, &mut rng)?;
        let out = env.step(&actions)?;
        for (t, r) in totals.iter_mut().zip(&out.rewards) {
            *t += r.r_total;
        }
        result.support_rate.push(out.support_rate);
        result.omega.push(out.omega);
        result
            .resolution
            .push(env.state().agents.iter().map(|a| a.level.pixels).collect());
        result.users_per_uav.push(out.association.row_counts());
        obs = out.observations;
    }
    result.total_reward_mean = totals.iter().sum::<f64>() / totals.len() as f64;
    Ok(result)
}

fn by_step<T: Copy>(runs: &[IterationResult], get: impl Fn(&IterationResult) -> &Vec<Vec<T>>, f: impl Fn(T) -> f64) -> Vec<Vec<Stat>> {
    let steps = runs.first().map_or(0, |r| get(r).len());
    (0..steps)
        .map(|t| {
            let width = get(&runs[0])[t].len();
            (0..width).map(|j| Stat::of(runs.iter().map(|r| f(get(r)[t][j])))).collect()
        })
        .collect()
}

/// Run `iterations` greedy episodes on the layout drawn from `seed`;
/// iteration `i` uses dynamics seed `seed + i * stride`. Iterations run in
/// parallel and merge in index order.
pub fn evaluate(
    actors: &ActorNetworks,
    scheme: Scheme,
    scenario: &ScenarioConfig,
    iterations: usize,
    seed: u64,
    stride: u64,
) -> Result<EvalReport, HarnessError> {
    if iterations == 0 {
        return Err(HarnessError::Config("iterations must be at least 1".into()));
    }
    scenario.validate()?;
    crate::checkpoint::check_actor_width(actors, scenario.observation_len())?;
    let runs: Vec<IterationResult> = (0..iterations)
        .into_par_iter()
        .map(|i| run_iteration(actors, scheme, scenario, seed, dynamics_seed(seed, stride, i)))
        .collect::<Result<_, _>>()?;
    let steps = scenario.horizon;
    Ok(EvalReport {
        scheme,
        iterations,
        layout_seed: seed,
        seed_stride: stride,
        support_rate: Stat::of(runs.iter().map(IterationResult::support_rate_mean)),
        omega: Stat::of(runs.iter().map(|r| Stat::of(r.omega.iter().copied()).mean)),
        total_reward: Stat::of(runs.iter().map(|r| r.total_reward_mean)),
        support_rate_by_step: (0..steps).map(|t| Stat::of(runs.iter().map(|r| r.support_rate[t]))).collect(),
        omega_by_step: (0..steps).map(|t| Stat::of(runs.iter().map(|r| r.omega[t]))).collect(),
        resolution_by_step: by_step(&runs, |r| &r.resolution, f64::from),
        users_per_uav_by_step: by_step(&runs, |r| &r.users_per_uav, |v| v as f64),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use acr_core::{Trainer, TrainerConfig};

    fn scenario() -> ScenarioConfig {
        ScenarioConfig {
            horizon: 12,
            raster_cell: 20.0,
            malfunction_probability: 0.2,
            ..ScenarioConfig::default()
        }
    }

    fn actors() -> ActorNetworks {
        Trainer::new(&scenario(), Scheme::Proposed, TrainerConfig::default(), 1)
            .unwrap()
            .actors()
            .clone()
    }

    #[test]
    fn untrained_policy_smoke() {
        let r = evaluate(&actors(), Scheme::Proposed, &scenario(), 4, 9, 1).unwrap();
        assert_eq!(r.runs.len(), 4);
        assert_eq!(r.support_rate_by_step.len(), 12);
        assert!((0.0..=1.0).contains(&r.support_rate.mean));
        for run in &r.runs {
            assert!(run.support_rate.iter().all(|s| (0.0..=1.0).contains(s)));
            assert!(run.users_per_uav.iter().all(|row| row.iter().sum::<usize>() <= 25));
        }
        assert_eq!(r.resolution_by_step[0].len(), 4);
        assert_eq!(r.users_per_uav_by_step[0].len(), 7);
    }

    #[test]
    fn deterministic_and_ordered() {
        let a = evaluate(&actors(), Scheme::Comp1, &scenario(), 1, 3, 1).unwrap();
        let b = evaluate(&actors(), Scheme::Comp1, &scenario(), 1, 3, 1).unwrap();
        assert_eq!(a, b);
        let many = evaluate(&actors(), Scheme::Comp1, &scenario(), 5, 3, 1).unwrap();
        assert_eq!(many.runs[0], a.runs[0]);
        let seeds: Vec<u64> = many.runs.iter().map(|r| r.dynamics_seed).collect();
        assert_eq!(seeds, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn zero_stride_repeats_one_episode() {
        let r = evaluate(&actors(), Scheme::Comp2, &scenario(), 3, 2, 0).unwrap();
        assert!(r.runs.iter().all(|run| run == &r.runs[0]));
        assert_eq!(r.support_rate.std, 0.0);
    }

    #[test]
    fn mismatched_policy_rejected() {
        let other = ScenarioConfig {
            users: 10,
            ..scenario()
        };
        assert!(matches!(
            evaluate(&actors(), Scheme::Proposed, &other, 1, 0, 1),
            Err(HarnessError::CheckpointMismatch(_))
        ));
        assert!(evaluate(&actors(), Scheme::Proposed, &scenario(), 0, 0, 1).is_err());
    }

    #[test]
    fn stat_examples() {
        let s = Stat::of([1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of([5.0]).std, 0.0);
    }
}
