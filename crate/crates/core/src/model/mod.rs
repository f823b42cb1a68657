//! Recurrent occupancy predictors.
//!
//! Both architectures share the same wiring:
//!
//! ```text
//! [measurement_t ; label_{t-1}] --conv 6x6, 16 filters, sigmoid--> features
//! features, hidden_{t-1} --GRU--> hidden_t
//! hidden_t --conv 6x6, 2 filters, softmax--> prob_t --threshold--> label_t
//! ```
//!
//! The Kalman GRU array ([`Architecture::Kga`]) runs one 16-unit GRU per grid
//! cell with shared weights, so the recurrent step has no spatial mixing and
//! neighbouring cells only interact through the encoder and the pooling
//! decoder. The ConvGRU baseline ([`Architecture::ConvGru`]) replaces each gate
//! matrix by a 3x3 convolution. `prob_t` is the prediction for frame `t + 1`.
//!
//! All activations, including the GRU candidate, are sigmoids, so hidden
//! states stay in `(0, 1)`.

pub mod checkpoint;
pub mod convgru;
pub mod kga;
pub(crate) mod layers;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridFrame, ProbFrame};
use crate::numerics::{Graph, ParamSet, Tensor};
use crate::rng::{stream, tag};

pub const HIDDEN: usize = 16;
pub const ENCODER_KERNEL: usize = 6;
pub const DECODER_KERNEL: usize = 6;
pub const CONVGRU_KERNEL: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    Kga,
    ConvGru,
}

impl Architecture {
    pub fn gate_kernel(self) -> usize {
        match self {
            Architecture::Kga => 1,
            Architecture::ConvGru => CONVGRU_KERNEL,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Kga => "KGA",
            Architecture::ConvGru => "ConvGRU",
        }
    }

    /// Parameter names and shapes in checkpoint order.
    pub fn layout(self) -> Vec<(&'static str, Vec<usize>)> {
        let k = self.gate_kernel();
        let gate = || vec![HIDDEN, HIDDEN, k, k];
        vec![
            (
                "encoder.kernel",
                vec![HIDDEN, 2, ENCODER_KERNEL, ENCODER_KERNEL],
            ),
            ("encoder.bias", vec![HIDDEN]),
            ("gru.w_z", gate()),
            ("gru.u_z", gate()),
            ("gru.b_z", vec![HIDDEN]),
            ("gru.w_r", gate()),
            ("gru.u_r", gate()),
            ("gru.b_r", vec![HIDDEN]),
            ("gru.w_h", gate()),
            ("gru.u_h", gate()),
            ("gru.b_h", vec![HIDDEN]),
            (
                "decoder.kernel",
                vec![2, HIDDEN, DECODER_KERNEL, DECODER_KERNEL],
            ),
            ("decoder.bias", vec![2]),
        ]
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kga" => Ok(Architecture::Kga),
            "convgru" => Ok(Architecture::ConvGru),
            other => Err(Error::InvalidConfig(format!(
                "unknown model `{other}` (kga|convgru)"
            ))),
        }
    }
}

/// Trainable scalars per block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    pub encoder: usize,
    pub recurrent: usize,
    pub decoder: usize,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.encoder + self.recurrent + self.decoder
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    arch: Architecture,
    params: ParamSet,
}

impl Model {
    /// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = stream(seed, &[tag::PARAMS]);
        let entries = arch
            .layout()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = if shape.len() == 1 {
                    vec![0.0; n]
                } else {
                    let bound = (1.0 / shape[1..].iter().product::<usize>() as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
                };
                (
                    name.to_string(),
                    Tensor::new(shape, data).expect("layout shapes are valid"),
                )
            })
            .collect();
        Self {
            arch,
            params: ParamSet::new(entries),
        }
    }

    pub fn zeros(arch: Architecture) -> Self {
        let entries = arch
            .layout()
            .into_iter()
            .map(|(name, shape)| (name.to_string(), Tensor::zeros(&shape)))
            .collect();
        Self {
            arch,
            params: ParamSet::new(entries),
        }
    }

    pub fn from_params(arch: Architecture, params: ParamSet) -> Result<Self> {
        let layout = arch.layout();
        let ok = layout.len() == params.len()
            && layout
                .iter()
                .zip(params.iter())
                .all(|((n, s), (pn, pt))| *n == pn && s.as_slice() == pt.shape());
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "model",
                expected: layout.iter().map(|(_, s)| s.iter().product()).collect(),
                got: params.iter().map(|(_, t)| t.len()).collect(),
            });
        }
        Ok(Self { arch, params })
    }

    /// Replaces all values from a flat vector in checkpoint order.
    pub fn from_flat(arch: Architecture, values: &[f64]) -> Result<Self> {
        let mut model = Self::zeros(arch);
        if values.len() != model.count_params() {
            return Err(Error::ShapeMismatch {
                op: "model",
                expected: vec![model.count_params()],
                got: vec![values.len()],
            });
        }
        model.params.assign_flat(values);
        Ok(model)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn count_params(&self) -> usize {
        self.params.scalar_count()
    }

    pub fn block_counts(&self) -> BlockCounts {
        let sum = |prefix: &str| {
            self.params
                .iter()
                .filter(|(n, _)| n.starts_with(prefix))
                .map(|(_, t)| t.len())
                .sum()
        };
        BlockCounts {
            encoder: sum("encoder."),
            recurrent: sum("gru."),
            decoder: sum("decoder."),
        }
    }

    pub fn param(&self, name: &str) -> &Tensor {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("no parameter `{name}`"))
    }
}

/// Recurrent state carried between frames.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    /// `16 x H x W`, channel-major: `hidden[c, i, j]` is unit `c` of cell `(i, j)`.
    pub hidden: Tensor,
    pub prev_label: GridFrame,
}

impl RecurrentState {
    pub fn extent(&self) -> (usize, usize) {
        self.prev_label.extent()
    }

    /// The 16-vector of cell `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> [f64; HIDDEN] {
        let (h, w) = self.extent();
        std::array::from_fn(|c| self.hidden.data()[(c * h + row) * w + col])
    }
}

/// Hidden units at the sigmoid midpoint, no previous prediction.
pub fn initial_state(height: usize, width: usize) -> RecurrentState {
    RecurrentState {
        hidden: Tensor::full(&[HIDDEN, height, width], 0.5),
        prev_label: GridFrame::empty(height, width),
    }
}

fn check_extent(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            op,
            expected: vec![a.0, a.1],
            got: vec![b.0, b.1],
        });
    }
    Ok(())
}

fn check_field(op: &'static str, t: &Tensor, height: usize, width: usize) -> Result<()> {
    if t.shape() != [HIDDEN, height, width] {
        return Err(Error::ShapeMismatch {
            op,
            expected: vec![HIDDEN, height, width],
            got: t.shape().to_vec(),
        });
    }
    Ok(())
}

/// Encoder features (`16 x H x W`) for a measurement and the previous labels.
pub fn encode(measurement: &GridFrame, prev_label: &GridFrame, model: &Model) -> Result<Tensor> {
    check_extent("encode", measurement.extent(), prev_label.extent())?;
    let mut g = Graph::new();
    let p = model.params.register_frozen(&mut g);
    let input = g.constant(layers::stack_input(measurement, prev_label));
    let features = layers::encode(&mut g, &p, input)?;
    Ok(g.value(features).clone())
}

/// One recurrent update of the model's GRU.
pub fn recurrent_step(features: &Tensor, hidden: &Tensor, model: &Model) -> Result<Tensor> {
    if features.shape().len() != 3 {
        return Err(Error::ShapeMismatch {
            op: "recurrent_step",
            expected: vec![HIDDEN, 0, 0],
            got: features.shape().to_vec(),
        });
    }
    let (h, w) = (features.shape()[1], features.shape()[2]);
    check_field("recurrent_step", features, h, w)?;
    check_field("recurrent_step", hidden, h, w)?;
    let mut g = Graph::new();
    let p = model.params.register_frozen(&mut g);
    let (x, hv) = (g.constant(features.clone()), g.constant(hidden.clone()));
    let next = layers::recurrent(&mut g, &p, x, hv)?;
    Ok(g.value(next).clone())
}

/// Pools hidden states into per-cell occupancy probability.
pub fn decode(hidden: &Tensor, model: &Model) -> Result<ProbFrame> {
    let shape = hidden.shape();
    if shape.len() != 3 || shape[0] != HIDDEN {
        return Err(Error::ShapeMismatch {
            op: "decode",
            expected: vec![HIDDEN, 0, 0],
            got: shape.to_vec(),
        });
    }
    let mut g = Graph::new();
    let p = model.params.register_frozen(&mut g);
    let hv = g.constant(hidden.clone());
    let prob = layers::decode(&mut g, &p, hv)?;
    ProbFrame::new(shape[1], shape[2], g.value(prob).data().to_vec())
}

/// Cells with probability at or above `level` are labelled occupied.
pub fn threshold(prob: &ProbFrame, level: f64) -> GridFrame {
    assert!(
        level > 0.0 && level < 1.0,
        "threshold level must lie in (0, 1), got {level}"
    );
    let cells = prob
        .values()
        .iter()
        .map(|&p| u8::from(p >= level))
        .collect();
    GridFrame::from_cells(prob.height(), prob.width(), cells).expect("binary cells")
}

/// Predict-then-correct update: encode the measurement together with the
/// previous labels, advance the GRU, decode and re-threshold.
pub fn step(
    measurement: &GridFrame,
    state: &RecurrentState,
    model: &Model,
) -> Result<(ProbFrame, RecurrentState)> {
    step_with_threshold(measurement, state, model, DEFAULT_THRESHOLD)
}

pub fn step_with_threshold(
    measurement: &GridFrame,
    state: &RecurrentState,
    model: &Model,
    level: f64,
) -> Result<(ProbFrame, RecurrentState)> {
    let (h, w) = state.extent();
    check_extent("step", (h, w), measurement.extent())?;
    check_field("step", &state.hidden, h, w)?;
    let mut g = Graph::new();
    let p = model.params.register_frozen(&mut g);
    let input = g.constant(layers::stack_input(measurement, &state.prev_label));
    let features = layers::encode(&mut g, &p, input)?;
    let hidden = g.constant(state.hidden.clone());
    let next = layers::recurrent(&mut g, &p, features, hidden)?;
    let prob_var = layers::decode(&mut g, &p, next)?;
    let prob = ProbFrame::new(h, w, g.value(prob_var).data().to_vec())?;
    let prev_label = threshold(&prob, level);
    Ok((
        prob,
        RecurrentState {
            hidden: g.value(next).clone(),
            prev_label,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// `probs[t]` predicts truth frame `t + 1`.
    pub probs: Vec<ProbFrame>,
    /// Hidden field after each step, when requested.
    pub hidden: Option<Vec<Tensor>>,
}

/// Runs the model over a measurement stream from [`initial_state`].
pub fn rollout(measurements: &[GridFrame], model: &Model, keep_hidden: bool) -> Result<Rollout> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::InvalidConfig("rollout needs at least one measurement".into()))?;
    let mut state = initial_state(first.height(), first.width());
    let mut probs = Vec::with_capacity(measurements.len());
    let mut hidden = keep_hidden.then(Vec::new);
    for m in measurements {
        let (prob, next) = step(m, &state, model)?;
        probs.push(prob);
        if let Some(h) = hidden.as_mut() {
            h.push(next.hidden.clone());
        }
        state = next;
    }
    Ok(Rollout { probs, hidden })
}

/// Number of trainable scalars.
pub fn count_params(model: &Model) -> usize {
    model.count_params()
}
