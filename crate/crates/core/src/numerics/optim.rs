use super::params::ParamSet;
use crate::error::{Error, Result};

/// Running mean of squared gradients for each parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsPropState {
    pub decay: f64,
    pub epsilon: f64,
    mean_square: Vec<Vec<f64>>,
}

impl RmsPropState {
    pub const DEFAULT_DECAY: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(params: &ParamSet) -> Self {
        Self::with_hyper(params, Self::DEFAULT_DECAY, Self::DEFAULT_EPSILON)
    }

    pub fn with_hyper(params: &ParamSet, decay: f64, epsilon: f64) -> Self {
        Self {
            decay,
            epsilon,
            mean_square: params.iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn mean_square(&self) -> &[Vec<f64>] {
        &self.mean_square
    }
}

/// One RMSprop update. Nothing is modified if any gradient is non-finite.
pub fn rmsprop_step(
    params: &mut ParamSet,
    grads: &[Vec<f64>],
    state: &mut RmsPropState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if grads.len() != params.len() || state.mean_square.len() != params.len() {
        return Err(Error::ShapeMismatch {
            op: "rmsprop_step",
            expected: vec![params.len()],
            got: vec![grads.len(), state.mean_square.len()],
        });
    }
    for ((name, tensor), g) in params.iter().zip(grads) {
        if g.len() != tensor.len() {
            return Err(Error::ShapeMismatch {
                op: "rmsprop_step",
                expected: tensor.shape().to_vec(),
                got: vec![g.len()],
            });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(name.to_string()));
        }
    }
    let (decay, eps) = (state.decay, state.epsilon);
    for ((tensor, g), s) in params
        .tensors_mut()
        .zip(grads)
        .zip(state.mean_square.iter_mut())
    {
        for ((p, &g), s) in tensor.data_mut().iter_mut().zip(g).zip(s.iter_mut()) {
            *s = decay * *s + (1.0 - decay) * g * g;
            *p -= lr * g / (s.sqrt() + eps);
        }
    }
    Ok(())
}
