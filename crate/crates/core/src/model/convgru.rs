//! ConvGRU baseline: every gate matrix of the GRU array becomes a 3x3
//! same-padded convolution, so the recurrent step mixes neighbouring cells.

use super::{recurrent_step, Architecture, Model, CONVGRU_KERNEL};
use crate::error::{Error, Result};
use crate::numerics::{ParamSet, Tensor};

pub fn init(seed: u64) -> Model {
    Model::init(Architecture::ConvGru, seed)
}

pub fn convgru_step(features: &Tensor, hidden: &Tensor, model: &Model) -> Result<Tensor> {
    if model.arch() != Architecture::ConvGru {
        return Err(Error::InvalidConfig(format!(
            "convgru_step needs a ConvGRU model, got {}",
            model.arch()
        )));
    }
    recurrent_step(features, hidden, model)
}

/// ConvGRU whose gate kernels carry the KGA gate matrices at the centre tap
/// and zeros elsewhere.
pub fn from_kga_center_tap(kga: &Model) -> Result<Model> {
    if kga.arch() != Architecture::Kga {
        return Err(Error::InvalidConfig("expected a KGA model".into()));
    }
    let k = CONVGRU_KERNEL;
    let centre = (k / 2) * k + k / 2;
    let entries = Architecture::ConvGru
        .layout()
        .into_iter()
        .zip(kga.params().iter())
        .map(|((name, shape), (_, src))| {
            let tensor = if shape.len() == 4 && shape[2] == k && name.starts_with("gru.") {
                let mut data = vec![0.0; shape.iter().product()];
                for (n, &v) in src.data().iter().enumerate() {
                    data[n * k * k + centre] = v;
                }
                Tensor::new(shape, data)?
            } else {
                src.clone()
            };
            Ok((name.to_string(), tensor))
        })
        .collect::<Result<Vec<_>>>()?;
    Model::from_params(Architecture::ConvGru, ParamSet::new(entries))
}
