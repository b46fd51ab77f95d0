//! Joint CommNet forward/backward over all agents.
//!
//! Every dense layer after the first takes `[h | c]`, the agent's own hidden
//! state `h` and a message `c` of the same width. A CommNet agent's message
//! is the mean of the *other* agents' current hidden states; a DNN agent's
//! message is zero. The final layer is a softmax over actions.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PolicyError, PolicyKind};
use crate::neural::{Activation, Gradients, LayerShape, Matrix, Network};

/// Shape of a policy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArchitecture {
    pub input: usize,
    pub width: usize,
    /// Total dense layers, including the softmax output layer.
    pub dense_layers: usize,
    pub actions: usize,
}

impl PolicyArchitecture {
    pub fn new(input: usize) -> Self {
        Self {
            input,
            width: 64,
            dense_layers: 6,
            actions: crate::environment::Action::COUNT,
        }
    }

    /// Communication mixes per forward pass: one per hidden transition.
    pub fn comm_layers(&self) -> usize {
        self.dense_layers - 1
    }

    pub fn shapes(&self) -> Vec<LayerShape> {
        (0..self.dense_layers)
            .map(|k| {
                let last = k + 1 == self.dense_layers;
                LayerShape {
                    inputs: if k == 0 { self.input } else { 2 * self.width },
                    outputs: if last { self.actions } else { self.width },
                    activation: if last { Activation::Softmax } else { Activation::Relu },
                }
            })
            .collect()
    }

    pub fn xavier<R: Rng + ?Sized>(&self, rng: &mut R) -> Network {
        Network::xavier(&self.shapes(), self.width, rng).expect("policy shapes chain")
    }
}

/// One parameter set per policy kind, shared by every agent of that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorNetworks {
    pub commnet: Network,
    pub dnn: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGradients {
    pub commnet: Gradients,
    pub dnn: Gradients,
}

/// Message rule used by the joint forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommRule {
    /// CommNet agents average their peers, DNN agents get zero.
    ByKind,
    /// Every agent gets a zero message.
    Zeroed,
}

/// Per-layer, per-agent cache of a joint forward pass.
#[derive(Debug, Clone)]
pub struct JointTape {
    kinds: Vec<PolicyKind>,
    rule: CommRule,
    /// `inputs[k][m]`: input of layer `k` for agent `m`.
    inputs: Vec<Vec<Matrix>>,
    outputs: Vec<Vec<Matrix>>,
    /// `messages[k][m]`: message fed to layer `k` (k >= 1).
    messages: Vec<Vec<Matrix>>,
}

impl JointTape {
    /// Message received by agent `m` at layer `k` (`k >= 1`).
    pub fn message(&self, layer: usize, agent: usize) -> &Matrix {
        &self.messages[layer - 1][agent]
    }

    /// Hidden state of agent `m` after layer `k`.
    pub fn hidden(&self, layer: usize, agent: usize) -> &Matrix {
        &self.outputs[layer][agent]
    }
}

impl ActorNetworks {
    pub fn new<R: Rng + ?Sized>(arch: &PolicyArchitecture, rng: &mut R) -> Self {
        let commnet = arch.xavier(rng);
        let dnn = arch.xavier(rng);
        Self { commnet, dnn }
    }

    pub fn net(&self, kind: PolicyKind) -> &Network {
        match kind {
            PolicyKind::CommNet => &self.commnet,
            PolicyKind::Dnn => &self.dnn,
        }
    }

    pub fn net_mut(&mut self, kind: PolicyKind) -> &mut Network {
        match kind {
            PolicyKind::CommNet => &mut self.commnet,
            PolicyKind::Dnn => &mut self.dnn,
        }
    }

    pub fn zero_gradients(&self) -> ActorGradients {
        ActorGradients {
            commnet: self.commnet.zero_gradients(),
            dnn: self.dnn.zero_gradients(),
        }
    }

    /// Joint forward pass. `inputs[m]` holds agent `m`'s observations, one
    /// sample per row; all agents share the row count.
    pub fn forward(&self, kinds: &[PolicyKind], inputs: &[Matrix]) -> Result<(Vec<Matrix>, JointTape), PolicyError> {
        self.forward_with(kinds, inputs, CommRule::ByKind)
    }

    pub fn forward_with(
        &self,
        kinds: &[PolicyKind],
        inputs: &[Matrix],
        rule: CommRule,
    ) -> Result<(Vec<Matrix>, JointTape), PolicyError> {
        let agents = inputs.len();
        if kinds.len() != agents || agents == 0 {
            return Err(PolicyError::Arity {
                expected: kinds.len(),
                got: agents,
            });
        }
        let communicating = rule == CommRule::ByKind && kinds.contains(&PolicyKind::CommNet);
        if communicating && agents < 2 {
            return Err(PolicyError::SingleAgentComm);
        }
        let batch = inputs[0].rows();
        if inputs.iter().any(|x| x.rows() != batch) {
            return Err(PolicyError::BatchMismatch);
        }
        let depth = self.commnet.layers().len();
        let width = self.commnet.context();

        let mut tape = JointTape {
            kinds: kinds.to_vec(),
            rule,
            inputs: Vec::with_capacity(depth),
            outputs: Vec::with_capacity(depth),
            messages: Vec::with_capacity(depth.saturating_sub(1)),
        };
        let mut hidden = Vec::with_capacity(agents);
        for (m, x) in inputs.iter().enumerate() {
            hidden.push(self.net(kinds[m]).layers()[0].forward(x)?);
        }
        tape.inputs.push(inputs.to_vec());
        tape.outputs.push(hidden.clone());

        let receives = |m: usize| rule == CommRule::ByKind && kinds[m] == PolicyKind::CommNet;
        for k in 1..depth {
            let messages: Vec<Matrix> = (0..agents)
                .map(|m| {
                    if receives(m) {
                        peer_mean(&hidden, m)
                    } else {
                        Matrix::zeros(batch, width)
                    }
                })
                .collect();
            // A zero message is left off the input and skipped by the layer.
            let layer_inputs: Vec<Matrix> = (0..agents)
                .map(|m| if receives(m) { hidden[m].hconcat(&messages[m]) } else { hidden[m].clone() })
                .collect();
            let mut next = Vec::with_capacity(agents);
            for (m, x) in layer_inputs.iter().enumerate() {
                next.push(self.net(kinds[m]).layers()[k].forward_prefix(x));
            }
            tape.messages.push(messages);
            tape.inputs.push(layer_inputs);
            tape.outputs.push(next.clone());
            hidden = next;
        }
        Ok((hidden, tape))
    }

    /// Parameter gradients of `sum_m sum(d_outputs[m] * y[m])`, with
    /// gradients flowing through every message into the peers that sent it.
    pub fn backward(&self, tape: &JointTape, d_outputs: &[Matrix]) -> Result<ActorGradients, PolicyError> {
        let agents = tape.kinds.len();
        if d_outputs.len() != agents {
            return Err(PolicyError::Arity {
                expected: agents,
                got: d_outputs.len(),
            });
        }
        let depth = tape.inputs.len();
        let width = self.commnet.context();
        let mut grads = self.zero_gradients();
        let mut delta: Vec<Matrix> = d_outputs.to_vec();

        for k in (0..depth).rev() {
            let mut input_grads = Vec::with_capacity(agents);
            for m in 0..agents {
                let kind = tape.kinds[m];
                let layer = &self.net(kind).layers()[k];
                let target = match kind {
                    PolicyKind::CommNet => &mut grads.commnet,
                    PolicyKind::Dnn => &mut grads.dnn,
                };
                let dx = layer.backward(
                    &tape.inputs[k][m],
                    &tape.outputs[k][m],
                    &delta[m],
                    &mut target.layers[k],
                    k > 0,
                )?;
                input_grads.push(dx);
            }
            if k == 0 {
                break;
            }
            let mut own = Vec::with_capacity(agents);
            let mut message_grads = Vec::with_capacity(agents);
            for dx in input_grads {
                let dx = dx.expect("input gradient requested");
                if dx.cols() > width {
                    let (h, c) = dx.hsplit(width);
                    own.push(h);
                    message_grads.push(Some(c));
                } else {
                    own.push(dx);
                    message_grads.push(None);
                }
            }
            if tape.rule == CommRule::ByKind {
                let share = 1.0 / (agents as f64 - 1.0);
                for m in 0..agents {
                    let Some(part) = message_grads[m].as_mut() else {
                        continue;
                    };
                    let mut part = part.clone();
                    part.scale(share);
                    for (peer, grad) in own.iter_mut().enumerate() {
                        if peer != m {
                            grad.add_assign(&part);
                        }
                    }
                }
            }
            delta = own;
        }
        Ok(grads)
    }
}

/// Mean of every agent's hidden state except `skip`. Each element is
/// summed in ascending order, so the result does not depend on how peers are
/// labeled.
pub fn peer_mean(hidden: &[Matrix], skip: usize) -> Matrix {
    let rows = hidden[0].rows();
    let cols = hidden[0].cols();
    let mut peers: Vec<Vec<f64>> = hidden
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != skip)
        .map(|(_, h)| h.as_slice().to_vec())
        .collect();
    let count = peers.len();
    // Odd-even transposition sort, applied elementwise across the peers.
    for pass in 0..count {
        let mut i = pass % 2;
        while i + 1 < count {
            let (low, high) = peers.split_at_mut(i + 1);
            for (a, b) in low[i].iter_mut().zip(high[0].iter_mut()) {
                let (lo, hi) = (a.min(*b), a.max(*b));
                *a = lo;
                *b = hi;
            }
            i += 2;
        }
    }
    let mut sum = peers.remove(0);
    for p in &peers {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let scale = count as f64;
    for s in sum.iter_mut() {
        *s /= scale;
    }
    Matrix::from_vec(rows, cols, sum)
}
