//! Dense `f64` tensors with just enough reverse-mode differentiation to train
//! the occupancy models.

mod conv;
mod graph;
mod optim;
mod params;
mod tensor;

pub use graph::{bce_value, sigmoid_scalar, Graph, Var, BCE_EPSILON};
pub use optim::{rmsprop_step, RmsPropState};
pub use params::ParamSet;
pub use tensor::Tensor;
