use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix};
use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Softmax,
    Linear,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Softmax => 1,
            Activation::Linear => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Softmax),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Softmax of one row, in place. Shifted by the row maximum.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored row-major as
/// `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Weight and bias gradients of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            activation,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Xavier-uniform weights on `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn xavier<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self {
            inputs,
            outputs,
            activation,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.inputs + input]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn zero_gradient(&self) -> LayerGradient {
        LayerGradient {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix, NeuralError> {
        if x.cols() != self.inputs {
            return Err(NeuralError::DimensionMismatch {
                expected: self.inputs,
                got: x.cols(),
            });
        }
        Ok(self.forward_prefix(x))
    }

    /// Forward pass on the leading `x.cols()` inputs, with the remaining
    /// inputs taken as zero. The zero tail is skipped, not multiplied.
    pub(crate) fn forward_prefix(&self, x: &Matrix) -> Matrix {
        assert!(x.cols() <= self.inputs, "prefix wider than the layer");
        let batch = x.rows();
        let mut z = Matrix::zeros(batch, self.outputs);
        for i in 0..batch {
            z.row_mut(i).copy_from_slice(&self.bias);
        }
        gemm(
            batch,
            x.cols(),
            self.outputs,
            1.0,
            x.as_slice(),
            (x.cols(), 1),
            &self.weights,
            (1, self.inputs),
            1.0,
            z.as_mut_slice(),
            (self.outputs, 1),
        );
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => {
                for v in z.as_mut_slice() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                for i in 0..batch {
                    softmax_in_place(z.row_mut(i));
                }
            }
        }
        z
    }

    /// Accumulate parameter gradients into `grad` given the cached `input`
    /// and `output` of a forward pass, and return the input gradient when
    /// `want_input` is set. A narrower `input` is a prefix pass: its zero
    /// tail gets no weight gradient and no input gradient.
    pub fn backward(
        &self,
        input: &Matrix,
        output: &Matrix,
        d_output: &Matrix,
        grad: &mut LayerGradient,
        want_input: bool,
    ) -> Result<Option<Matrix>, NeuralError> {
        let batch = input.rows();
        let width = input.cols();
        let shapes_ok = width <= self.inputs
            && output.cols() == self.outputs
            && d_output.cols() == self.outputs
            && output.rows() == batch
            && d_output.rows() == batch
            && grad.weights.len() == self.weights.len()
            && grad.bias.len() == self.bias.len();
        if !shapes_ok {
            return Err(NeuralError::StaleTape);
        }

        let mut dz = d_output.clone();
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => {
                for (d, y) in dz.as_mut_slice().iter_mut().zip(output.as_slice()) {
                    if *y <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                for i in 0..batch {
                    let y = output.row(i);
                    let dot: f64 = dz.row(i).iter().zip(y).map(|(d, p)| d * p).sum();
                    for (d, p) in dz.row_mut(i).iter_mut().zip(y) {
                        *d = p * (*d - dot);
                    }
                }
            }
        }

        for i in 0..batch {
            for (b, d) in grad.bias.iter_mut().zip(dz.row(i)) {
                *b += d;
            }
        }
        // dW (out x in) += dz^T (out x batch) * x (batch x in)
        gemm(
            self.outputs,
            batch,
            width,
            1.0,
            dz.as_slice(),
            (1, self.outputs),
            input.as_slice(),
            (width, 1),
            1.0,
            &mut grad.weights,
            (self.inputs, 1),
        );
        if !want_input {
            return Ok(None);
        }
        // dx (batch x in) = dz (batch x out) * W (out x in)
        let mut dx = Matrix::zeros(batch, width);
        gemm(
            batch,
            self.outputs,
            width,
            1.0,
            dz.as_slice(),
            (self.outputs, 1),
            &self.weights,
            (self.inputs, 1),
            0.0,
            dx.as_mut_slice(),
            (width, 1),
        );
        Ok(Some(dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_linear_layer() {
        let mut layer = DenseLayer::zeros(3, 3, Activation::Linear);
        for i in 0..3 {
            layer.weights[i * 3 + i] = 1.0;
        }
        let x = Matrix::row_vector(&[1.5, -2.0, 0.25]);
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn softmax_examples() {
        let layer = DenseLayer::zeros(2, 4, Activation::Softmax);
        let y = layer.forward(&Matrix::row_vector(&[3.0, 1.0])).unwrap();
        assert!(y.row(0).iter().all(|p| (p - 0.25).abs() < 1e-15));

        let mut row = [0.0, libm::log(2.0)];
        softmax_in_place(&mut row);
        assert!((row[0] - 1.0 / 3.0).abs() < 1e-15 && (row[1] - 2.0 / 3.0).abs() < 1e-15);

        let mut shifted = [0.0 + 100.0, libm::log(2.0) + 100.0];
        softmax_in_place(&mut shifted);
        assert!((shifted[0] - row[0]).abs() < 1e-12);
    }

    #[test]
    fn scalar_linear_gradient() {
        let layer = DenseLayer {
            inputs: 1,
            outputs: 1,
            activation: Activation::Linear,
            weights: vec![0.7],
            bias: vec![0.1],
        };
        let x = Matrix::row_vector(&[3.0]);
        let y = layer.forward(&x).unwrap();
        let mut g = layer.zero_gradient();
        let dx = layer
            .backward(&x, &y, &Matrix::row_vector(&[1.0]), &mut g, true)
            .unwrap()
            .unwrap();
        assert_eq!(g.weights, vec![3.0]);
        assert_eq!(g.bias, vec![1.0]);
        assert_eq!(dx.as_slice(), &[0.7]);
    }

    #[test]
    fn dimension_errors() {
        let layer = DenseLayer::zeros(3, 2, Activation::Relu);
        assert_eq!(
            layer.forward(&Matrix::row_vector(&[1.0])),
            Err(NeuralError::DimensionMismatch { expected: 3, got: 1 })
        );
        let x = Matrix::row_vector(&[1.0, 2.0, 3.0]);
        let y = layer.forward(&x).unwrap();
        let mut g = layer.zero_gradient();
        assert_eq!(
            layer.backward(&x, &y, &Matrix::row_vector(&[1.0]), &mut g, false),
            Err(NeuralError::StaleTape)
        );
    }

    #[test]
    fn activation_codes_round_trip() {
        for a in [Activation::Relu, Activation::Softmax, Activation::Linear] {
            assert_eq!(Activation::from_code(a.code()), Some(a));
        }
        assert_eq!(Activation::from_code(9), None);
    }
}
