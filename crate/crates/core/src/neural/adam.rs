use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use super::NeuralError;

/// Adam with bias correction. Moment buffers mirror the network layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Network, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: net.zero_gradients(),
            v: net.zero_gradients(),
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<(), NeuralError> {
        if !self.m.same_shape(grads) || grads.layers.len() != net.layers().len() {
            return Err(NeuralError::ShapeMismatch);
        }
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        };
        for (k, layer) in net.layers_mut().iter_mut().enumerate() {
            let g = &grads.layers[k];
            let m = &mut self.m.layers[k];
            let v = &mut self.v.layers[k];
            for i in 0..layer.weights.len() {
                update(&mut layer.weights[i], g.weights[i], &mut m.weights[i], &mut v.weights[i]);
            }
            for i in 0..layer.bias.len() {
                update(&mut layer.bias[i], g.bias[i], &mut m.bias[i], &mut v.bias[i]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Activation, DenseLayer};
    use alloc::vec;

    fn scalar(w: f64) -> Network {
        Network::new(
            vec![DenseLayer {
                inputs: 1,
                outputs: 1,
                activation: Activation::Linear,
                weights: vec![w],
                bias: vec![0.0],
            }],
            0,
        )
        .unwrap()
    }

    fn grad(net: &Network, g: f64) -> Gradients {
        let mut out = net.zero_gradients();
        out.layers[0].weights[0] = g;
        out
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut net = scalar(0.4);
        let mut adam = Adam::new(&net, 0.001);
        let zero = net.zero_gradients();
        adam.step(&mut net, &zero).unwrap();
        assert_eq!(net, scalar(0.4));
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut net = scalar(0.0);
        let mut adam = Adam::new(&net, 0.001);
        let g = grad(&net, 1.0);
        adam.step(&mut net, &g).unwrap();
        let expected = -0.001 * 1.0 / (1.0 + 1e-8);
        assert!((net.parameter(0) - expected).abs() < 1e-15);
    }

    #[test]
    fn odd_symmetry() {
        let mut a = scalar(0.3);
        let mut b = scalar(0.3);
        let mut adam_a = Adam::new(&a, 0.001);
        let mut adam_b = adam_a.clone();
        for g in [0.5, -1.5, 2.0] {
            let ga = grad(&a, g);
            let gb = grad(&b, -g);
            adam_a.step(&mut a, &ga).unwrap();
            adam_b.step(&mut b, &gb).unwrap();
            assert!(((a.parameter(0) - 0.3) + (b.parameter(0) - 0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut net = scalar(0.0);
        let mut adam = Adam::new(&net, 0.001);
        let other = Network::new(vec![DenseLayer::zeros(2, 1, Activation::Linear)], 0).unwrap();
        assert_eq!(adam.step(&mut net, &other.zero_gradients()), Err(NeuralError::ShapeMismatch));
    }
}
