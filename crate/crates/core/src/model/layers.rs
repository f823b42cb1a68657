//! Graph construction shared by both architectures.
//!
//! Parameter arrays are bound in checkpoint order; the indices below address
//! the resulting `Var` slice.

use crate::error::Result;
use crate::grid::GridFrame;
use crate::numerics::{Graph, Tensor, Var};

pub(crate) const ENC_KERNEL: usize = 0;
pub(crate) const ENC_BIAS: usize = 1;
pub(crate) const W_Z: usize = 2;
pub(crate) const U_Z: usize = 3;
pub(crate) const B_Z: usize = 4;
pub(crate) const W_R: usize = 5;
pub(crate) const U_R: usize = 6;
pub(crate) const B_R: usize = 7;
pub(crate) const W_H: usize = 8;
pub(crate) const U_H: usize = 9;
pub(crate) const B_H: usize = 10;
pub(crate) const DEC_KERNEL: usize = 11;
pub(crate) const DEC_BIAS: usize = 12;

/// `[measurement; prev_label]` as a `2 x H x W` tensor.
pub(crate) fn stack_input(measurement: &GridFrame, prev_label: &GridFrame) -> Tensor {
    let (h, w) = measurement.extent();
    let mut data = measurement.to_f64();
    data.extend(prev_label.to_f64());
    Tensor::new(vec![2, h, w], data).expect("positive extent")
}

pub(crate) fn encode(g: &mut Graph, p: &[Var], input: Var) -> Result<Var> {
    let pre = g.conv2d(input, p[ENC_KERNEL], Some(p[ENC_BIAS]))?;
    Ok(g.sigmoid(pre))
}

fn gate(g: &mut Graph, x: Var, h: Var, w: Var, u: Var, b: Var) -> Result<Var> {
    let from_x = g.conv2d(x, w, Some(b))?;
    let from_h = g.conv2d(h, u, None)?;
    let pre = g.add(from_x, from_h)?;
    Ok(g.sigmoid(pre))
}

/// GRU update with sigmoid candidate. Gate maps are `16 x 16 x K x K`; with
/// `K = 1` every cell is updated independently.
pub(crate) fn recurrent(g: &mut Graph, p: &[Var], x: Var, h: Var) -> Result<Var> {
    let z = gate(g, x, h, p[W_Z], p[U_Z], p[B_Z])?;
    let r = gate(g, x, h, p[W_R], p[U_R], p[B_R])?;
    let rh = g.mul(r, h)?;
    let candidate = gate(g, x, rh, p[W_H], p[U_H], p[B_H])?;
    g.gru_blend(z, h, candidate)
}

/// Occupancy probability (`H x W`, softmax channel 0).
pub(crate) fn decode(g: &mut Graph, p: &[Var], h: Var) -> Result<Var> {
    let logits = g.conv2d(h, p[DEC_KERNEL], Some(p[DEC_BIAS]))?;
    let soft = g.softmax_channels(logits)?;
    g.select_channel(soft, 0)
}
