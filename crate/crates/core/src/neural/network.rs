use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerGradient};
use super::matrix::Matrix;
use super::NeuralError;
use crate::seeding::{self, tags};

/// Shape of one layer, for construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Ordered dense stack.
///
/// Every layer after the first receives the previous layer's output
/// followed by `context` extra features. Plain networks use `context = 0`;
/// communication policies carry the averaged peer message there. A plain
/// forward pass feeds zeros into the context slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<DenseLayer>,
    context: usize,
}

/// Cached per-layer inputs and outputs of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pub inputs: Vec<Matrix>,
    pub outputs: Vec<Matrix>,
}

/// Gradients with the same layout as a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>, context: usize) -> Result<Self, NeuralError> {
        if layers.is_empty() {
            return Err(NeuralError::EmptyNetwork);
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(NeuralError::ShapeMismatch);
            }
            if k > 0 && layer.inputs != layers[k - 1].outputs + context {
                return Err(NeuralError::BrokenChain { layer: k });
            }
            if layer.activation == Activation::Softmax && k + 1 != layers.len() {
                return Err(NeuralError::SoftmaxNotLast);
            }
            if !layer.is_finite() {
                return Err(NeuralError::NonFinite);
            }
        }
        Ok(Self { layers, context })
    }

    /// Xavier-uniform initialization over `shapes`.
    pub fn xavier<R: Rng + ?Sized>(shapes: &[LayerShape], context: usize, rng: &mut R) -> Result<Self, NeuralError> {
        let layers = shapes
            .iter()
            .map(|s| DenseLayer::xavier(s.inputs, s.outputs, s.activation, rng))
            .collect();
        Self::new(layers, context)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    fn locate(&self, mut index: usize) -> (usize, bool, usize) {
        for (k, layer) in self.layers.iter().enumerate() {
            if index < layer.weights.len() {
                return (k, true, index);
            }
            index -= layer.weights.len();
            if index < layer.bias.len() {
                return (k, false, index);
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter view: layer by layer, weights then bias.
    pub fn parameter(&self, index: usize) -> f64 {
        let (k, weight, i) = self.locate(index);
        if weight {
            self.layers[k].weights[i]
        } else {
            self.layers[k].bias[i]
        }
    }

    pub fn set_parameter(&mut self, index: usize, value: f64) {
        let (k, weight, i) = self.locate(index);
        if weight {
            self.layers[k].weights[i] = value;
        } else {
            self.layers[k].bias[i] = value;
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(DenseLayer::zero_gradient).collect(),
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape), NeuralError> {
        let (y, tape) = self.forward_batch(&Matrix::row_vector(x))?;
        Ok((y.into_vec(), tape))
    }

    /// Forward a batch (one sample per row) with zero context.
    pub fn forward_batch(&self, x: &Matrix) -> Result<(Matrix, Tape), NeuralError> {
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        if x.cols() != self.input_dim() {
            return Err(NeuralError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let mut current = x.clone();
        for layer in &self.layers {
            // Context slots are zero, so each layer runs on its prefix.
            let input = current;
            let output = layer.forward_prefix(&input);
            tape.inputs.push(input);
            current = output.clone();
            tape.outputs.push(output);
        }
        Ok((current, tape))
    }

    /// Parameter gradients of `sum(d_output * y)` through a recorded tape.
    pub fn backward(&self, tape: &Tape, d_output: &Matrix) -> Result<Gradients, NeuralError> {
        let (grads, _) = self.backward_with_input(tape, d_output, false)?;
        Ok(grads)
    }

    /// Like [`Network::backward`], optionally also returning the gradient
    /// with respect to the network input.
    pub fn backward_with_input(
        &self,
        tape: &Tape,
        d_output: &Matrix,
        want_input: bool,
    ) -> Result<(Gradients, Option<Matrix>), NeuralError> {
        let mut grads = self.zero_gradients();
        let input_grad = self.accumulate_backward(tape, d_output, &mut grads, want_input)?;
        Ok((grads, input_grad))
    }

    /// Backward pass accumulating into existing gradients.
    pub fn accumulate_backward(
        &self,
        tape: &Tape,
        d_output: &Matrix,
        grads: &mut Gradients,
        want_input: bool,
    ) -> Result<Option<Matrix>, NeuralError> {
        if tape.inputs.len() != self.layers.len() || tape.outputs.len() != self.layers.len() {
            return Err(NeuralError::StaleTape);
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NeuralError::ShapeMismatch);
        }
        let mut delta = d_output.clone();
        for k in (0..self.layers.len()).rev() {
            let need = k > 0 || want_input;
            let dx = self.layers[k].backward(&tape.inputs[k], &tape.outputs[k], &delta, &mut grads.layers[k], need)?;
            if let Some(dx) = dx {
                delta = dx;
            }
        }
        Ok(if want_input { Some(delta) } else { None })
    }
}

impl Gradients {
    pub fn get(&self, mut index: usize) -> f64 {
        for layer in &self.layers {
            if index < layer.weights.len() {
                return layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.bias.len() {
                return layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("gradient index out of range");
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<(), NeuralError> {
        if !self.same_shape(other) {
            return Err(NeuralError::ShapeMismatch);
        }
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.values_mut() {
            *v *= factor;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.values().map(|v| v * v).sum())
    }

    /// Rescale so the global L2 norm is at most `max_norm`. Returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.l2_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn same_shape(&self, other: &Gradients) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len())
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| *v == 0.0)
    }
}

/// Plain dense chain over `dims` (input, hidden..., output) with
/// `hidden` activations and an `output` activation on the last layer.
pub fn xavier_init(dims: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Network, NeuralError> {
    if dims.len() < 2 {
        return Err(NeuralError::EmptyNetwork);
    }
    let shapes: Vec<LayerShape> = dims
        .windows(2)
        .enumerate()
        .map(|(k, w)| LayerShape {
            inputs: w[0],
            outputs: w[1],
            activation: if k + 2 == dims.len() { output } else { hidden },
        })
        .collect();
    let mut rng = seeding::rng_from(seed, tags::INIT, 0);
    Network::xavier(&shapes, 0, &mut rng)
}
