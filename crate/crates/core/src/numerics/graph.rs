//! Reverse-mode automatic differentiation over a recorded operation list.
//!
//! Every operation appends a node whose parents already exist, so insertion
//! order is a topological order and the reverse sweep is a single backwards
//! pass over the node list.

use super::conv::{self, ConvGeometry};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Clamp applied to probabilities inside the binary cross entropy.
pub const BCE_EPSILON: f64 = 1e-7;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Param,
    Constant,
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Option<Var>,
        geom: ConvGeometry,
    },
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    /// `(1 - z) * h + z * candidate`
    GruBlend {
        z: Var,
        h: Var,
        candidate: Var,
    },
    SoftmaxChannels(Var),
    SelectChannel {
        input: Var,
        channel: usize,
    },
    Bce {
        prob: Var,
        target: Vec<f64>,
    },
    Sum(Var),
    Mean(Vec<Var>),
    Scale(Var, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
    grad: Option<Vec<f64>>,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn bce_cell(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross entropy of probabilities against binary targets.
pub fn bce_value(prob: &[f64], target: &[f64]) -> f64 {
    let total: f64 = prob.iter().zip(target).map(|(&p, &y)| bce_cell(p, y)).sum();
    total / prob.len() as f64
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf; receives a gradient on `backward`.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Param, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    /// Accumulated gradient of a parameter, if any backward pass reached it.
    pub fn grad(&self, var: Var) -> Option<&[f64]> {
        self.nodes[var.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op,
                expected: self.shape(a).to_vec(),
                got: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    /// Same-padded convolution of a `C_in x H x W` input with an
    /// `C_out x C_in x K x K` kernel and optional `C_out` bias.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>) -> Result<Var> {
        let (is, ks) = (self.shape(input), self.shape(kernel));
        if is.len() != 3 {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                expected: vec![0, 0, 0],
                got: is.to_vec(),
            });
        }
        if ks.len() != 4 || ks[2] != ks[3] {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                expected: vec![
                    ks[0],
                    is[0],
                    ks.get(2).copied().unwrap_or(1),
                    ks.get(2).copied().unwrap_or(1),
                ],
                got: ks.to_vec(),
            });
        }
        if ks[1] != is[0] {
            return Err(Error::ChannelCount {
                op: "conv2d",
                expected: ks[1],
                got: is[0],
            });
        }
        let geom = ConvGeometry {
            c_in: is[0],
            c_out: ks[0],
            height: is[1],
            width: is[2],
            k: ks[2],
        };
        if let Some(b) = bias {
            if self.shape(b) != [geom.c_out] {
                return Err(Error::ShapeMismatch {
                    op: "conv2d",
                    expected: vec![geom.c_out],
                    got: self.shape(b).to_vec(),
                });
            }
        }
        let out = conv::forward(
            &geom,
            self.value(input).data(),
            self.value(kernel).data(),
            bias.map(|b| self.value(b).data()),
        );
        let value = Tensor::new(vec![geom.c_out, geom.height, geom.width], out)?;
        let mut parents = vec![input, kernel];
        parents.extend(bias);
        let needs = self.needs(&parents);
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                kernel,
                bias,
                geom,
            },
            needs,
        ))
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape().to_vec(), data).expect("shape preserved")
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let ta = self.value(a);
        Tensor::new(
            ta.shape().to_vec(),
            ta.data().iter().map(|&x| f(x)).collect(),
        )
        .expect("shape preserved")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.zip_map(a, b, |x, y| x + y);
        let needs = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), needs))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.zip_map(a, b, |x, y| x * y);
        let needs = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), needs))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.map(a, |x| x * factor);
        let needs = self.needs(&[a]);
        self.push(value, Op::Scale(a, factor), needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.map(a, sigmoid_scalar);
        let needs = self.needs(&[a]);
        self.push(value, Op::Sigmoid(a), needs)
    }

    pub fn gru_blend(&mut self, z: Var, h: Var, candidate: Var) -> Result<Var> {
        self.same_shape("gru_blend", z, h)?;
        self.same_shape("gru_blend", z, candidate)?;
        let (tz, th, tc) = (self.value(z), self.value(h), self.value(candidate));
        let data = tz
            .data()
            .iter()
            .zip(th.data())
            .zip(tc.data())
            .map(|((&z, &h), &c)| (1.0 - z) * h + z * c)
            .collect();
        let value = Tensor::new(tz.shape().to_vec(), data)?;
        let needs = self.needs(&[z, h, candidate]);
        Ok(self.push(value, Op::GruBlend { z, h, candidate }, needs))
    }

    /// Two-way softmax across the leading axis of a `2 x H x W` tensor.
    pub fn softmax_channels(&mut self, a: Var) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 3 || shape[0] != 2 {
            return Err(Error::ChannelCount {
                op: "softmax_channels",
                expected: 2,
                got: shape.first().copied().unwrap_or(0),
            });
        }
        let cells = shape[1] * shape[2];
        let x = self.value(a).data();
        let mut out = vec![0.0; 2 * cells];
        for n in 0..cells {
            let (l0, l1) = (x[n], x[cells + n]);
            let m = l0.max(l1);
            let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
            let s = e0 + e1;
            out[n] = e0 / s;
            out[cells + n] = e1 / s;
        }
        let needs = self.needs(&[a]);
        Ok(self.push(Tensor::new(shape, out)?, Op::SoftmaxChannels(a), needs))
    }

    /// Channel `c` of a `C x H x W` tensor as an `H x W` tensor.
    pub fn select_channel(&mut self, a: Var, channel: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 3 || channel >= shape[0] {
            return Err(Error::ChannelCount {
                op: "select_channel",
                expected: channel + 1,
                got: shape.first().copied().unwrap_or(0),
            });
        }
        let cells = shape[1] * shape[2];
        let data = self.value(a).data()[channel * cells..][..cells].to_vec();
        let needs = self.needs(&[a]);
        Ok(self.push(
            Tensor::new(vec![shape[1], shape[2]], data)?,
            Op::SelectChannel { input: a, channel },
            needs,
        ))
    }

    /// Mean per-cell binary cross entropy of `prob` against a constant binary target.
    pub fn bce_loss(&mut self, prob: Var, target: &Tensor) -> Result<Var> {
        if self.shape(prob) != target.shape() {
            return Err(Error::ShapeMismatch {
                op: "bce_loss",
                expected: self.shape(prob).to_vec(),
                got: target.shape().to_vec(),
            });
        }
        let loss = bce_value(self.value(prob).data(), target.data());
        let needs = self.needs(&[prob]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Bce {
                prob,
                target: target.data().to_vec(),
            },
            needs,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).data().iter().sum();
        let needs = self.needs(&[a]);
        self.push(Tensor::scalar(total), Op::Sum(a), needs)
    }

    /// Mean of scalar nodes.
    pub fn mean(&mut self, terms: &[Var]) -> Result<Var> {
        if terms.is_empty() {
            return Err(Error::EmptyDimension {
                op: "mean",
                shape: vec![0],
            });
        }
        for &t in terms {
            if !self.value(t).is_scalar() {
                return Err(Error::NotScalar(self.shape(t).to_vec()));
            }
        }
        let total: f64 = terms.iter().map(|&t| self.value(t).item()).sum();
        let needs = self.needs(terms);
        Ok(self.push(
            Tensor::scalar(total / terms.len() as f64),
            Op::Mean(terms.to_vec()),
            needs,
        ))
    }

    /// Accumulates `d loss / d param` into every parameter reachable from `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::NotScalar(self.shape(loss).to_vec()));
        }
        let mut adjoint: Vec<Option<Vec<f64>>> = Vec::new();
        adjoint.resize_with(loss.0 + 1, || None);
        adjoint[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            let Some(g) = adjoint[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            let contributions = self.local_gradients(id, &g)?;
            if matches!(node.op, Op::Param) {
                let slot = self.nodes[id]
                    .grad
                    .get_or_insert_with(|| vec![0.0; g.len()]);
                for (s, v) in slot.iter_mut().zip(&g) {
                    *s += v;
                }
                continue;
            }
            for (parent, contribution) in contributions {
                if parent.0 >= id {
                    return Err(Error::GraphCycle {
                        node: id,
                        parent: parent.0,
                    });
                }
                if !self.nodes[parent.0].needs_grad {
                    continue;
                }
                match adjoint[parent.0].as_mut() {
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(&contribution) {
                            *a += c;
                        }
                    }
                    None => adjoint[parent.0] = Some(contribution),
                }
            }
        }
        Ok(())
    }

    /// Vector-Jacobian products of node `id` for each parent.
    fn local_gradients(&self, id: usize, g: &[f64]) -> Result<Vec<(Var, Vec<f64>)>> {
        let val = |v: Var| self.nodes[v.0].value.data();
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        let out = self.nodes[id].value.data();
        Ok(match &self.nodes[id].op {
            Op::Param | Op::Constant => Vec::new(),
            Op::Conv2d {
                input,
                kernel,
                bias,
                geom,
            } => {
                let (gi, gk, gb) =
                    conv::backward(geom, val(*input), val(*kernel), g, wants(*input));
                let mut parts = vec![(*kernel, gk)];
                if let Some(gi) = gi {
                    parts.push((*input, gi));
                }
                if let Some(b) = bias {
                    parts.push((*b, gb));
                }
                parts
            }
            Op::Add(a, b) => vec![(*a, g.to_vec()), (*b, g.to_vec())],
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                vec![
                    (*a, g.iter().zip(vb).map(|(g, y)| g * y).collect()),
                    (*b, g.iter().zip(va).map(|(g, x)| g * x).collect()),
                ]
            }
            Op::Scale(a, f) => vec![(*a, g.iter().map(|g| g * f).collect())],
            Op::Sigmoid(a) => vec![(
                *a,
                g.iter().zip(out).map(|(g, s)| g * s * (1.0 - s)).collect(),
            )],
            Op::GruBlend { z, h, candidate } => {
                let (vz, vh, vc) = (val(*z), val(*h), val(*candidate));
                vec![
                    (*z, (0..g.len()).map(|n| g[n] * (vc[n] - vh[n])).collect()),
                    (*h, (0..g.len()).map(|n| g[n] * (1.0 - vz[n])).collect()),
                    (*candidate, (0..g.len()).map(|n| g[n] * vz[n]).collect()),
                ]
            }
            Op::SoftmaxChannels(a) => {
                let cells = out.len() / 2;
                let mut gx = vec![0.0; out.len()];
                for n in 0..cells {
                    let (p0, p1) = (out[n], out[cells + n]);
                    let inner = g[n] * p0 + g[cells + n] * p1;
                    gx[n] = p0 * (g[n] - inner);
                    gx[cells + n] = p1 * (g[cells + n] - inner);
                }
                vec![(*a, gx)]
            }
            Op::SelectChannel { input, channel } => {
                let mut gx = vec![0.0; val(*input).len()];
                gx[channel * g.len()..][..g.len()].copy_from_slice(g);
                vec![(*input, gx)]
            }
            Op::Bce { prob, target } => {
                let p = val(*prob);
                let scale = g[0] / p.len() as f64;
                let gp = p
                    .iter()
                    .zip(target)
                    .map(|(&p, &y)| {
                        if p <= BCE_EPSILON || p >= 1.0 - BCE_EPSILON {
                            0.0
                        } else {
                            -scale * (y / p - (1.0 - y) / (1.0 - p))
                        }
                    })
                    .collect();
                vec![(*prob, gp)]
            }
            Op::Sum(a) => vec![(*a, vec![g[0]; val(*a).len()])],
            Op::Mean(terms) => {
                let share = g[0] / terms.len() as f64;
                terms.iter().map(|&t| (t, vec![share])).collect()
            }
        })
    }
}
