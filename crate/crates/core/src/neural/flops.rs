//! Floating-point operation counts for one forward pass.
//!
//! Convention: a dense layer costs `2 * in * out` for the multiply-adds,
//! `out` for the bias, plus `out` for ReLU or `3 * out` for softmax. Each
//! communication mix costs `(M - 1) * width` additions and `width` scalings.

use super::layer::{Activation, DenseLayer};
use super::network::Network;

pub fn activation_flops(activation: Activation, outputs: usize) -> u64 {
    let out = outputs as u64;
    match activation {
        Activation::Relu => out,
        Activation::Softmax => 3 * out,
        Activation::Linear => 0,
    }
}

pub fn layer_flops(layer: &DenseLayer) -> u64 {
    let (i, o) = (layer.inputs as u64, layer.outputs as u64);
    2 * i * o + o + activation_flops(layer.activation, layer.outputs)
}

/// Cost of averaging `agents - 1` peer vectors of length `width`.
pub fn comm_mix_flops(width: usize, agents: usize) -> u64 {
    let w = width as u64;
    (agents.saturating_sub(1) as u64) * w + w
}

/// Forward-pass FLOPS of `net` with `comm_layers` communication mixes among
/// `agents` agents. The message width is the first layer's output width.
pub fn flops_count(net: &Network, comm_layers: usize, agents: usize) -> u64 {
    let dense: u64 = net.layers().iter().map(layer_flops).sum();
    let width = net.layers()[0].outputs;
    dense + comm_layers as u64 * comm_mix_flops(width, agents)
}
