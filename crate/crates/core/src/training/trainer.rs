use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::{EpisodeMetrics, ReplayBuffer, TrainError, TrainerConfig, Transition};
use crate::environment::{Action, Environment, Observation, ScenarioConfig};
use crate::neural::{Activation, Adam, Gradients, LayerShape, Matrix, Network};
use crate::policy::{
    argmax, leader_first, select_actions, ActorGradients, ActorNetworks, PolicyArchitecture, PolicyKind, Scheme,
};
use crate::seeding::{self, tags, SimRng};

/// `r` at terminal transitions, `r + gamma * q_next` otherwise.
pub fn bellman_target(reward: f64, done: bool, q_next: f64, gamma: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q_next
    }
}

/// Critic layers: the policy's hidden widths without communication inputs
/// and a linear head with one value per action.
pub fn critic_architecture(arch: &PolicyArchitecture) -> Vec<LayerShape> {
    (0..arch.dense_layers)
        .map(|k| {
            let last = k + 1 == arch.dense_layers;
            LayerShape {
                inputs: if k == 0 { arch.input } else { arch.width },
                outputs: if last { arch.actions } else { arch.width },
                activation: if last { Activation::Linear } else { Activation::Relu },
            }
        })
        .collect()
}

/// Seed of the environment reset for training episode `episode`.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seeding::derive(seed, tags::EPISODE, episode as u64)
}

/// Joint epsilon-greedy actions in agent order. The leader occupies the
/// CommNet slot of the Proposed scheme.
pub fn policy_actions<R: Rng + ?Sized>(
    actors: &ActorNetworks,
    scheme: Scheme,
    observations: &[Observation],
    leader: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<Action>, TrainError> {
    let agents = observations.len();
    let order = leader_first(agents, leader);
    let kinds = scheme.kinds(agents, 0);
    let inputs: Vec<Matrix> = order.iter().map(|&a| Matrix::row_vector(&observations[a])).collect();
    let (pi, _) = actors.forward(&kinds, &inputs)?;
    let mut dists: Vec<&[f64]> = vec![&[]; agents];
    for (slot, &agent) in order.iter().enumerate() {
        dists[agent] = pi[slot].row(0);
    }
    Ok(select_actions(&dists, epsilon, rng))
}

/// Totals of one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSummary {
    pub total_reward: Vec<f64>,
    pub total_reward_mean: f64,
    pub support_rate_mean: f64,
    pub omega_mean: f64,
    pub steps: usize,
}

#[derive(Default)]
struct Accumulator {
    total_reward: Vec<f64>,
    support: f64,
    omega: f64,
    steps: usize,
}

impl Accumulator {
    fn new(agents: usize) -> Self {
        Self {
            total_reward: vec![0.0; agents],
            ..Self::default()
        }
    }

    fn add(&mut self, rewards: &[f64], support: f64, omega: f64) {
        for (t, r) in self.total_reward.iter_mut().zip(rewards) {
            *t += r;
        }
        self.support += support;
        self.omega += omega;
        self.steps += 1;
    }

    fn finish(self) -> RolloutSummary {
        let n = self.steps.max(1) as f64;
        let mean = if self.total_reward.is_empty() {
            0.0
        } else {
            self.total_reward.iter().sum::<f64>() / self.total_reward.len() as f64
        };
        RolloutSummary {
            total_reward_mean: mean,
            total_reward: self.total_reward,
            support_rate_mean: self.support / n,
            omega_mean: self.omega / n,
            steps: self.steps,
        }
    }
}

/// One episode of uniformly random joint actions from a reset with `seed`.
pub fn random_episode<R: Rng + ?Sized>(env: &mut Environment, seed: u64, rng: &mut R) -> Result<RolloutSummary, TrainError> {
    env.reset(seed);
    let agents = env.config().agents;
    let mut acc = Accumulator::new(agents);
    while !env.is_done() {
        let actions: Vec<Action> = (0..agents)
            .map(|_| Action::ALL[rng.random_range(0..Action::COUNT)])
            .collect();
        let out = env.step(&actions)?;
        let rewards: Vec<f64> = out.rewards.iter().map(|r| r.r_total).collect();
        acc.add(&rewards, out.support_rate, out.omega);
    }
    Ok(acc.finish())
}

/// A sampled minibatch in slot order: slot 0 is the leader, the rest follow
/// by agent index. Matrices hold one sample per row.
struct Batch {
    size: usize,
    states: Vec<Matrix>,
    next_states: Vec<Matrix>,
    actions: Vec<Vec<usize>>,
    rewards: Vec<Vec<f64>>,
    done: Vec<bool>,
}

impl Batch {
    fn new(transitions: &[&Transition], agents: usize, input: usize) -> Result<Self, TrainError> {
        if transitions.is_empty() {
            return Err(TrainError::EmptyBatch);
        }
        let size = transitions.len();
        let mut states = vec![Vec::with_capacity(size * input); agents];
        let mut next_states = vec![Vec::with_capacity(size * input); agents];
        let mut actions = vec![Vec::with_capacity(size); agents];
        let mut rewards = vec![Vec::with_capacity(size); agents];
        let mut done = Vec::with_capacity(size);
        for t in transitions {
            if !t.is_consistent() || t.agents() != agents {
                return Err(TrainError::Arity);
            }
            for (slot, agent) in leader_first(agents, t.leader).into_iter().enumerate() {
                if t.states[agent].len() != input || t.next_states[agent].len() != input {
                    return Err(TrainError::Arity);
                }
                states[slot].extend_from_slice(&t.states[agent]);
                next_states[slot].extend_from_slice(&t.next_states[agent]);
                actions[slot].push(t.actions[agent].index());
                rewards[slot].push(t.rewards[agent]);
            }
            done.push(t.done);
        }
        let to_matrix = |rows: Vec<Vec<f64>>| rows.into_iter().map(|d| Matrix::from_vec(size, input, d)).collect();
        Ok(Self {
            size,
            states: to_matrix(states),
            next_states: to_matrix(next_states),
            actions,
            rewards,
            done,
        })
    }
}

/// All slots stacked vertically, slot-major.
fn stack(slots: &[Matrix]) -> Matrix {
    let cols = slots[0].cols();
    let rows = slots.iter().map(Matrix::rows).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for m in slots {
        data.extend_from_slice(m.as_slice());
    }
    Matrix::from_vec(rows, cols, data)
}

fn clip(grads: &mut Gradients, limit: f64) {
    if limit > 0.0 {
        grads.clip_global_norm(limit);
    }
}

/// Online and target networks in one bundle, for checkpointing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerNetworks {
    pub actors: ActorNetworks,
    pub target_actors: ActorNetworks,
    pub critic: Network,
    pub target_critic: Network,
}

/// Owns the networks, optimizers, replay buffer and random streams of one
/// training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainerConfig,
    scheme: Scheme,
    arch: PolicyArchitecture,
    agents: usize,
    seed: u64,
    actors: ActorNetworks,
    target_actors: ActorNetworks,
    critic: Network,
    target_critic: Network,
    commnet_adam: Adam,
    dnn_adam: Adam,
    critic_adam: Adam,
    update_count: u64,
    steps: u64,
    buffer: ReplayBuffer,
    explore_rng: SimRng,
    sample_rng: SimRng,
}

impl Trainer {
    pub fn new(scenario: &ScenarioConfig, scheme: Scheme, config: TrainerConfig, seed: u64) -> Result<Self, TrainError> {
        scenario.validate()?;
        config.validate()?;
        if scenario.agents < 2 && scheme != Scheme::Comp2 {
            return Err(TrainError::Config("communicating schemes need at least two agents".into()));
        }
        let arch = PolicyArchitecture::new(scenario.observation_len());
        let mut init = seeding::rng_from(seed, tags::INIT, 0);
        let actors = ActorNetworks::new(&arch, &mut init);
        let critic = Network::xavier(&critic_architecture(&arch), 0, &mut init)?;
        let nets = TrainerNetworks {
            target_actors: actors.clone(),
            target_critic: critic.clone(),
            actors,
            critic,
        };
        Self::assemble(scenario.agents, arch, scheme, config, seed, nets, 0)
    }

    /// Rebuild from saved networks. Optimizer moments and the buffer start
    /// empty.
    pub fn restore(
        scenario: &ScenarioConfig,
        scheme: Scheme,
        config: TrainerConfig,
        seed: u64,
        networks: TrainerNetworks,
        update_count: u64,
    ) -> Result<Self, TrainError> {
        scenario.validate()?;
        config.validate()?;
        let arch = PolicyArchitecture::new(scenario.observation_len());
        let fresh = Self::new(scenario, scheme, config, seed)?;
        let same = |a: &Network, b: &Network| {
            a.context() == b.context()
                && a.layers().len() == b.layers().len()
                && a.layers().iter().zip(b.layers()).all(|(x, y)| {
                    x.inputs == y.inputs && x.outputs == y.outputs && x.activation == y.activation
                })
        };
        let ok = same(&networks.actors.commnet, &fresh.actors.commnet)
            && same(&networks.actors.dnn, &fresh.actors.dnn)
            && same(&networks.target_actors.commnet, &fresh.actors.commnet)
            && same(&networks.target_actors.dnn, &fresh.actors.dnn)
            && same(&networks.critic, &fresh.critic)
            && same(&networks.target_critic, &fresh.critic);
        if !ok {
            return Err(TrainError::Config("network shapes do not match the scenario".into()));
        }
        Self::assemble(scenario.agents, arch, scheme, config, seed, networks, update_count)
    }

    fn assemble(
        agents: usize,
        arch: PolicyArchitecture,
        scheme: Scheme,
        config: TrainerConfig,
        seed: u64,
        nets: TrainerNetworks,
        update_count: u64,
    ) -> Result<Self, TrainError> {
        Ok(Self {
            commnet_adam: Adam::new(&nets.actors.commnet, config.learning_rate),
            dnn_adam: Adam::new(&nets.actors.dnn, config.learning_rate),
            critic_adam: Adam::new(&nets.critic, config.learning_rate),
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            explore_rng: seeding::rng_from(seed, tags::EXPLORATION, 0),
            sample_rng: seeding::rng_from(seed, tags::SAMPLING, 0),
            actors: nets.actors,
            target_actors: nets.target_actors,
            critic: nets.critic,
            target_critic: nets.target_critic,
            config,
            scheme,
            arch,
            agents,
            seed,
            update_count,
            steps: 0,
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn architecture(&self) -> &PolicyArchitecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn actors(&self) -> &ActorNetworks {
        &self.actors
    }

    pub fn target_actors(&self) -> &ActorNetworks {
        &self.target_actors
    }

    pub fn critic(&self) -> &Network {
        &self.critic
    }

    pub fn target_critic(&self) -> &Network {
        &self.target_critic
    }

    pub fn networks(&self) -> TrainerNetworks {
        TrainerNetworks {
            actors: self.actors.clone(),
            target_actors: self.target_actors.clone(),
            critic: self.critic.clone(),
            target_critic: self.target_critic.clone(),
        }
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.value(self.update_count)
    }

    fn slot_kinds(&self) -> Vec<PolicyKind> {
        self.scheme.kinds(self.agents, 0)
    }

    fn batch(&self, transitions: &[&Transition]) -> Result<Batch, TrainError> {
        Batch::new(transitions, self.agents, self.arch.input)
    }

    /// Bellman targets per slot and sample, from the target networks.
    fn targets(&self, batch: &Batch) -> Result<Vec<Vec<f64>>, TrainError> {
        let (pi_next, _) = self.target_actors.forward(&self.slot_kinds(), &batch.next_states)?;
        let (q_next, _) = self.target_critic.forward_batch(&stack(&batch.next_states))?;
        Ok((0..self.agents)
            .map(|slot| {
                (0..batch.size)
                    .map(|b| {
                        let a = argmax(pi_next[slot].row(b));
                        let q = q_next.get(slot * batch.size + b, a);
                        bellman_target(batch.rewards[slot][b], batch.done[b], q, self.config.gamma)
                    })
                    .collect()
            })
            .collect())
    }

    /// Mean squared error between targets and the critic at the taken
    /// actions, over every (sample, agent) pair. Returns the loss before the
    /// Adam step.
    pub fn critic_update(&mut self, transitions: &[&Transition]) -> Result<f64, TrainError> {
        let batch = self.batch(transitions)?;
        self.critic_step(&batch)
    }

    fn critic_step(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        let targets = self.targets(batch)?;
        let (q, tape) = self.critic.forward_batch(&stack(&batch.states))?;
        let n = (batch.size * self.agents) as f64;
        let mut d = Matrix::zeros(q.rows(), q.cols());
        let mut loss = 0.0;
        for slot in 0..self.agents {
            for b in 0..batch.size {
                let row = slot * batch.size + b;
                let a = batch.actions[slot][b];
                let err = q.get(row, a) - targets[slot][b];
                loss += err * err;
                d.set(row, a, 2.0 * err / n);
            }
        }
        let mut grads = self.critic.backward(&tape, &d)?;
        clip(&mut grads, self.config.grad_clip);
        self.critic_adam.step(&mut self.critic, &grads)?;
        Ok(loss / n)
    }

    /// Objective `mean over (sample, agent) of sum_a pi(a|s) Q(s, a)` and its
    /// gradient with respect to the actor parameters. The critic is frozen.
    pub fn actor_gradients(&self, transitions: &[&Transition]) -> Result<(f64, ActorGradients), TrainError> {
        let batch = self.batch(transitions)?;
        self.actor_objective(&batch)
    }

    fn actor_objective(&self, batch: &Batch) -> Result<(f64, ActorGradients), TrainError> {
        let (q, _) = self.critic.forward_batch(&stack(&batch.states))?;
        let (pi, tape) = self.actors.forward(&self.slot_kinds(), &batch.states)?;
        let n = (batch.size * self.agents) as f64;
        let mut objective = 0.0;
        let mut d_outputs = Vec::with_capacity(self.agents);
        for (slot, p) in pi.iter().enumerate() {
            let mut d = Matrix::zeros(batch.size, p.cols());
            for b in 0..batch.size {
                let q_row = q.row(slot * batch.size + b);
                objective += p.row(b).iter().zip(q_row).map(|(x, y)| x * y).sum::<f64>();
                for (g, qa) in d.row_mut(b).iter_mut().zip(q_row) {
                    *g = qa / n;
                }
            }
            d_outputs.push(d);
        }
        let grads = self.actors.backward(&tape, &d_outputs)?;
        Ok((objective / n, grads))
    }

    /// One ascent step on the actor objective. Returns the objective before
    /// the step.
    pub fn actor_update(&mut self, transitions: &[&Transition]) -> Result<f64, TrainError> {
        let batch = self.batch(transitions)?;
        self.actor_step(&batch)
    }

    fn actor_step(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        let (objective, mut grads) = self.actor_objective(batch)?;
        // Adam minimizes; flip the sign to ascend.
        for (kind, g, adam) in [
            (PolicyKind::CommNet, &mut grads.commnet, &mut self.commnet_adam),
            (PolicyKind::Dnn, &mut grads.dnn, &mut self.dnn_adam),
        ] {
            if !self.scheme.uses(kind) {
                continue;
            }
            g.scale(-1.0);
            clip(g, self.config.grad_clip);
            adam.step(self.actors.net_mut(kind), g)?;
        }
        Ok(objective)
    }

    /// Copy online parameters into the targets.
    pub fn sync_targets(&mut self) {
        self.target_actors = self.actors.clone();
        self.target_critic = self.critic.clone();
    }

    /// Sync when the update count is a multiple of the period.
    pub fn target_sync(&mut self) -> bool {
        let due = self.update_count % self.config.target_sync == 0;
        if due {
            self.sync_targets();
        }
        due
    }

    /// Sample a minibatch and run critic update, actor update and target
    /// sync. Returns the critic loss, or `None` while the buffer is short of a
    /// batch.
    pub fn update(&mut self) -> Result<Option<f64>, TrainError> {
        if self.buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = {
            let picked = self.buffer.sample(self.config.batch_size, &mut self.sample_rng)?;
            Batch::new(&picked, self.agents, self.arch.input)?
        };
        let loss = self.critic_step(&batch)?;
        self.actor_step(&batch)?;
        self.update_count += 1;
        self.target_sync();
        Ok(Some(loss))
    }

    /// Joint actions for the current exploration rate.
    pub fn act(&mut self, observations: &[Observation], leader: usize) -> Result<Vec<Action>, TrainError> {
        let eps = self.epsilon();
        policy_actions(&self.actors, self.scheme, observations, leader, eps, &mut self.explore_rng)
    }

    pub fn remember(&mut self, transition: Transition) -> Result<(), TrainError> {
        if !transition.is_consistent() || transition.agents() != self.agents {
            return Err(TrainError::Arity);
        }
        self.buffer.push(transition);
        Ok(())
    }

    /// Run training episode `episode`: reset, act, store, update.
    pub fn train_episode(&mut self, env: &mut Environment, episode: usize) -> Result<EpisodeMetrics, TrainError> {
        if env.config().agents != self.agents || env.config().observation_len() != self.arch.input {
            return Err(TrainError::Arity);
        }
        let mut obs = env.reset(episode_seed(self.seed, episode));
        let leader = env.state().leader();
        let mut acc = Accumulator::new(self.agents);
        let mut loss_sum = 0.0;
        let mut updates = 0u64;
        while !env.is_done() {
            let actions = self.act(&obs, leader)?;
            let out = env.step(&actions)?;
            let rewards: Vec<f64> = out.rewards.iter().map(|r| r.r_total).collect();
            acc.add(&rewards, out.support_rate, out.omega);
            self.buffer.push(Transition {
                states: obs,
                actions,
                rewards,
                next_states: out.observations.clone(),
                done: out.done,
                leader,
            });
            self.steps += 1;
            if self.steps % self.config.update_period as u64 == 0 {
                if let Some(loss) = self.update()? {
                    loss_sum += loss;
                    updates += 1;
                }
            }
            obs = out.observations;
        }
        let summary = acc.finish();
        Ok(EpisodeMetrics {
            episode,
            scheme: self.scheme,
            total_reward_mean: summary.total_reward_mean,
            total_reward: summary.total_reward,
            critic_loss: (updates > 0).then(|| loss_sum / updates as f64),
            epsilon: self.epsilon(),
            support_rate_mean: summary.support_rate_mean,
            omega_mean: summary.omega_mean,
            updates,
        })
    }
}

/// Train for `episodes` episodes, calling `on_episode` after each.
pub fn train_with<F: FnMut(&EpisodeMetrics)>(
    scenario: &ScenarioConfig,
    scheme: Scheme,
    config: TrainerConfig,
    episodes: usize,
    seed: u64,
    mut on_episode: F,
) -> Result<Trainer, TrainError> {
    if episodes == 0 {
        return Err(TrainError::Config("episodes must be at least 1".into()));
    }
    let mut trainer = Trainer::new(scenario, scheme, config, seed)?;
    let mut env = Environment::new(scenario.clone(), episode_seed(seed, 0))?;
    for episode in 0..episodes {
        let metrics = trainer.train_episode(&mut env, episode)?;
        on_episode(&metrics);
    }
    Ok(trainer)
}

pub fn train(
    scenario: &ScenarioConfig,
    scheme: Scheme,
    config: TrainerConfig,
    episodes: usize,
    seed: u64,
) -> Result<(Trainer, Vec<EpisodeMetrics>), TrainError> {
    let mut metrics = Vec::with_capacity(episodes);
    let trainer = train_with(scenario, scheme, config, episodes, seed, |m| metrics.push(m.clone()))?;
    Ok((trainer, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario() -> ScenarioConfig {
        ScenarioConfig {
            agents: 3,
            users: 4,
            non_agents: 1,
            horizon: 10,
            raster_cell: 40.0,
            ..ScenarioConfig::default()
        }
    }

    fn small_config() -> TrainerConfig {
        TrainerConfig {
            batch_size: 8,
            buffer_capacity: 200,
            target_sync: 5,
            ..TrainerConfig::default()
        }
    }

    /// Transitions from a short uniformly random rollout.
    fn rollout(scenario: &ScenarioConfig, seed: u64) -> Vec<Transition> {
        let mut env = Environment::new(scenario.clone(), seed).unwrap();
        let mut rng = seeding::rng_from(seed, 77, 0);
        let mut obs = env.observations();
        let leader = env.state().leader();
        let mut out = Vec::new();
        while !env.is_done() {
            let actions: Vec<Action> = (0..scenario.agents)
                .map(|_| Action::ALL[rng.random_range(0..Action::COUNT)])
                .collect();
            let step = env.step(&actions).unwrap();
            out.push(Transition {
                states: obs,
                actions,
                rewards: step.rewards.iter().map(|r| r.r_total).collect(),
                next_states: step.observations.clone(),
                done: step.done,
                leader,
            });
            obs = step.observations;
        }
        out
    }

    fn zero_last_layer(net: &mut Network) {
        let layers = net.layers_mut();
        let last = layers.len() - 1;
        layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        layers[last].bias.iter_mut().for_each(|b| *b = 0.0);
    }

    fn set_head_bias(net: &mut Network, bias: &[f64]) {
        let layers = net.layers_mut();
        let last = layers.len() - 1;
        layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        layers[last].bias.copy_from_slice(bias);
    }

    fn trainer(seed: u64) -> Trainer {
        Trainer::new(&small_scenario(), Scheme::Proposed, small_config(), seed).unwrap()
    }

    fn refs(ts: &[Transition]) -> Vec<&Transition> {
        ts.iter().collect()
    }

    #[test]
    fn bellman_examples() {
        assert_eq!(bellman_target(2.0, true, 123.0, 0.95), 2.0);
        assert!((bellman_target(0.0, false, 1.0, 0.95) - 0.95).abs() < 1e-15);
        assert_eq!(bellman_target(-3.5, false, 7.0, 0.0), -3.5);
    }

    #[test]
    fn critic_loss_examples() {
        let scenario = small_scenario();
        let mut ts = rollout(&scenario, 1);
        let mut t = trainer(2);
        zero_last_layer(&mut t.critic);
        zero_last_layer(&mut t.target_critic);

        // Critic output 0 everywhere and y = 0: loss 0 and no movement.
        for tr in ts.iter_mut() {
            tr.rewards.iter_mut().for_each(|r| *r = 0.0);
            tr.done = true;
        }
        let before = t.critic.clone();
        assert_eq!(t.critic_update(&refs(&ts)).unwrap(), 0.0);
        assert_eq!(t.critic, before);

        // y = 1, Q = 0 on one transition: loss 1.
        let mut one = ts[0].clone();
        one.rewards.iter_mut().for_each(|r| *r = 1.0);
        assert_eq!(t.critic_update(&[&one]).unwrap(), 1.0);
        assert!(t.critic_update(&[]).is_err());
    }

    #[test]
    fn duplicated_entries_weight_the_mean() {
        let scenario = small_scenario();
        let ts = rollout(&scenario, 3);
        let t = trainer(4);
        let loss = |batch: &[&Transition]| t.clone().critic_update(batch).unwrap();
        let l0 = loss(&[&ts[0]]);
        let l1 = loss(&[&ts[1]]);
        let dup = loss(&[&ts[0], &ts[0], &ts[1]]);
        assert!((dup - (2.0 * l0 + l1) / 3.0).abs() < 1e-9 * dup.abs().max(1.0));
    }

    #[test]
    fn critic_descends_on_frozen_batch() {
        let scenario = small_scenario();
        let ts = rollout(&scenario, 5);
        let config = TrainerConfig {
            learning_rate: 1e-4,
            ..small_config()
        };
        let mut t = Trainer::new(&scenario, Scheme::Comp1, config, 6).unwrap();
        let batch = refs(&ts);
        let losses: Vec<f64> = (0..100).map(|_| t.critic_update(&batch).unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
        assert!(losses[99] < losses[0]);
    }

    #[test]
    fn constant_critic_gives_zero_actor_gradient() {
        let ts = rollout(&small_scenario(), 7);
        let mut t = trainer(8);
        set_head_bias(&mut t.critic, &[2.5; 10]);
        let (objective, grads) = t.actor_gradients(&refs(&ts)).unwrap();
        assert!((objective - 2.5).abs() < 1e-12);
        assert!(grads.commnet.l2_norm() < 1e-12);
        assert!(grads.dnn.l2_norm() < 1e-12);
    }

    #[test]
    fn actor_ascends_toward_best_action() {
        let ts = rollout(&small_scenario(), 9);
        for scheme in Scheme::ALL {
            let mut t = Trainer::new(&small_scenario(), scheme, small_config(), 10).unwrap();
            let mut bias = [0.0; 10];
            bias[2] = 1.0;
            set_head_bias(&mut t.critic, &bias);
            let prob = |t: &Trainer| -> Vec<f64> {
                let batch = t.batch(&refs(&ts)).unwrap();
                let (pi, _) = t.actors.forward(&t.slot_kinds(), &batch.states).unwrap();
                pi.iter().flat_map(|p| (0..p.rows()).map(|b| p.get(b, 2)).collect::<Vec<_>>()).collect()
            };
            let before = prob(&t);
            t.actor_update(&refs(&ts)).unwrap();
            let after = prob(&t);
            for (a, b) in after.iter().zip(&before) {
                assert!(a > b, "{scheme}: {a} <= {b}");
            }
        }
    }

    #[test]
    fn objective_shifts_with_critic_bias() {
        let ts = rollout(&small_scenario(), 11);
        let t = trainer(12);
        let (base, _) = t.actor_gradients(&refs(&ts)).unwrap();
        let mut shifted = t.clone();
        let last = shifted.critic.layers().len() - 1;
        shifted.critic.layers_mut()[last].bias.iter_mut().for_each(|b| *b += 3.0);
        let (moved, _) = shifted.actor_gradients(&refs(&ts)).unwrap();
        assert!((moved - base - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unused_kind_is_untouched() {
        let ts = rollout(&small_scenario(), 13);
        let mut t = Trainer::new(&small_scenario(), Scheme::Comp2, small_config(), 14).unwrap();
        let commnet = t.actors.commnet.clone();
        let dnn = t.actors.dnn.clone();
        t.actor_update(&refs(&ts)).unwrap();
        assert_eq!(t.actors.commnet, commnet);
        assert_ne!(t.actors.dnn, dnn);
    }

    #[test]
    fn targets_move_only_at_sync_points() {
        let scenario = small_scenario();
        let mut t = trainer(15);
        for tr in rollout(&scenario, 16) {
            t.remember(tr).unwrap();
        }
        let mut last = t.target_critic.clone();
        for _ in 0..12 {
            let online_before = t.critic.clone();
            t.update().unwrap().unwrap();
            assert_ne!(t.critic, online_before);
            if t.update_count % 5 == 0 {
                assert_eq!(t.target_critic, t.critic);
                assert_eq!(t.target_actors, t.actors);
                last = t.target_critic.clone();
            } else {
                assert_eq!(t.target_critic, last);
                assert_ne!(t.target_critic, t.critic);
            }
        }
    }

    #[test]
    fn period_one_keeps_targets_equal() {
        let scenario = small_scenario();
        let config = TrainerConfig {
            target_sync: 1,
            ..small_config()
        };
        let mut t = Trainer::new(&scenario, Scheme::Proposed, config, 17).unwrap();
        for tr in rollout(&scenario, 18) {
            t.remember(tr).unwrap();
        }
        for _ in 0..4 {
            t.update().unwrap();
            assert_eq!(t.target_critic, t.critic);
            assert_eq!(t.target_actors, t.actors);
        }
    }

    #[test]
    fn warmup_makes_no_updates() {
        let scenario = small_scenario();
        let config = TrainerConfig {
            batch_size: 32,
            ..small_config()
        };
        let fresh = Trainer::new(&scenario, Scheme::Proposed, config, 19).unwrap();
        let (t, metrics) = train(&scenario, Scheme::Proposed, config, 1, 19).unwrap();
        assert_eq!(t.update_count(), 0);
        assert_eq!(t.buffer().len(), scenario.horizon);
        assert_eq!(t.actors(), fresh.actors());
        assert_eq!(t.critic(), fresh.critic());
        assert_eq!(metrics[0].critic_loss, None);
        assert_eq!(metrics[0].epsilon, 0.3);
    }

    #[test]
    fn training_is_deterministic_and_anneals() {
        let scenario = small_scenario();
        let run = || train(&scenario, Scheme::Proposed, small_config(), 4, 20).unwrap();
        let (a, ma) = run();
        let (b, mb) = run();
        assert_eq!(ma, mb);
        assert_eq!(a.networks(), b.networks());
        assert_eq!(a.update_count(), (4 * scenario.horizon - 7) as u64);
        assert!(ma.windows(2).all(|w| w[1].epsilon <= w[0].epsilon));
        assert!(ma.iter().all(|m| m.epsilon >= 0.01));
        assert!(ma.iter().all(|m| (0.0..=1.0).contains(&m.support_rate_mean)));
        let (_, other) = train(&scenario, Scheme::Proposed, small_config(), 4, 21).unwrap();
        assert_ne!(ma, other);
    }

    #[test]
    fn rejects_bad_inputs() {
        let scenario = small_scenario();
        assert!(train(&scenario, Scheme::Proposed, small_config(), 0, 0).is_err());
        let bad = TrainerConfig {
            gamma: 1.0,
            ..small_config()
        };
        assert!(Trainer::new(&scenario, Scheme::Proposed, bad, 0).is_err());
        let solo = ScenarioConfig {
            agents: 1,
            ..scenario.clone()
        };
        assert!(Trainer::new(&solo, Scheme::Comp1, small_config(), 0).is_err());
        assert!(Trainer::new(&solo, Scheme::Comp2, small_config(), 0).is_ok());
        let mut t = trainer(0);
        let mut tr = rollout(&scenario, 0).remove(0);
        tr.actions.pop();
        assert_eq!(t.remember(tr.clone()).unwrap_err(), TrainError::Arity);
        assert_eq!(t.critic_update(&[&tr]).unwrap_err(), TrainError::Arity);
    }

    #[test]
    fn leader_slot_follows_the_leader() {
        let scenario = small_scenario();
        let t = trainer(22);
        let mut ts = rollout(&scenario, 23);
        let base = t.actor_gradients(&refs(&ts[..4])).unwrap().0;
        // Relabel agents so the leader moves from agent `l` to agent 0.
        for tr in ts.iter_mut() {
            let l = tr.leader;
            tr.states.swap(0, l);
            tr.next_states.swap(0, l);
            tr.actions.swap(0, l);
            tr.rewards.swap(0, l);
            tr.leader = 0;
        }
        let relabeled = t.actor_gradients(&refs(&ts[..4])).unwrap().0;
        // Only the order of non-leader agents changes; CommNet means are
        // order-free, so the objective matches up to summation order.
        assert!((base - relabeled).abs() < 1e-12);
    }

    #[test]
    fn random_episode_runs_full_horizon() {
        let scenario = small_scenario();
        let mut env = Environment::new(scenario.clone(), 0).unwrap();
        let mut rng = seeding::rng_from(0, 0, 0);
        let s = random_episode(&mut env, 5, &mut rng).unwrap();
        assert_eq!(s.steps, scenario.horizon);
        assert!((0.0..=1.0).contains(&s.support_rate_mean));
        let mean = s.total_reward.iter().sum::<f64>() / 3.0;
        assert!((s.total_reward_mean - mean).abs() < 1e-12);
    }
}
