//! Kalman GRU array: one GRU per grid cell, weights shared across cells.

use super::{recurrent_step, Architecture, Model};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Trainable scalars of the default configuration.
pub const PARAM_COUNT: usize = 3906;

pub fn init(seed: u64) -> Model {
    Model::init(Architecture::Kga, seed)
}

/// Per-cell GRU update; `features` and `hidden` are `16 x H x W`.
pub fn gru_array_step(features: &Tensor, hidden: &Tensor, model: &Model) -> Result<Tensor> {
    if model.arch() != Architecture::Kga {
        return Err(Error::InvalidConfig(format!(
            "gru_array_step needs a KGA model, got {}",
            model.arch()
        )));
    }
    recurrent_step(features, hidden, model)
}
