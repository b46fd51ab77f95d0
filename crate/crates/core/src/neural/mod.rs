//! Minimal dense-network stack in f64: batched forward/backward, Xavier
//! initialization, Adam, and FLOPS accounting.

mod adam;
pub mod flops;
mod layer;
mod matrix;
mod network;

use thiserror::Error;

pub use adam::Adam;
pub use flops::flops_count;
pub use layer::{softmax_in_place, Activation, DenseLayer, LayerGradient};
pub use matrix::Matrix;
pub use network::{xavier_init, Gradients, LayerShape, Network, Tape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NeuralError {
    #[error("expected input width {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tape does not match the network")]
    StaleTape,
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("network has no layers")]
    EmptyNetwork,
    #[error("layer {layer} input width does not follow the previous layer")]
    BrokenChain { layer: usize },
    #[error("softmax is only allowed on the final layer")]
    SoftmaxNotLast,
    #[error("non-finite parameter")]
    NonFinite,
}
