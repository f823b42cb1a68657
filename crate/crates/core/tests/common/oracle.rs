//! Plain-loop reference computations, independent of the graph engine.
#![allow(dead_code)]

use kga::grid::GridFrame;
use kga::model::{Architecture, Model, HIDDEN};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Same-padded convolution, one output element at a time.
#[allow(clippy::too_many_arguments)]
pub fn conv_same(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    kernel: &[f64],
    c_out: usize,
    k: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let pad = ((k - 1) / 2) as isize;
    let mut out = vec![0.0; c_out * h * w];
    for o in 0..c_out {
        for i in 0..h {
            for j in 0..w {
                let mut acc = bias.map_or(0.0, |b| b[o]);
                for c in 0..c_in {
                    for u in 0..k {
                        for v in 0..k {
                            let y = i as isize + u as isize - pad;
                            let x = j as isize + v as isize - pad;
                            if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                                continue;
                            }
                            acc += kernel[((o * c_in + c) * k + u) * k + v]
                                * input[(c * h + y as usize) * w + x as usize];
                        }
                    }
                }
                out[(o * h + i) * w + j] = acc;
            }
        }
    }
    out
}

/// Exp-normalise two logits.
pub fn softmax2(a: f64, b: f64) -> (f64, f64) {
    let (ea, eb) = (a.exp(), b.exp());
    (ea / (ea + eb), eb / (ea + eb))
}

pub fn bce(prob: &[f64], target: &[f64]) -> f64 {
    let eps = 1e-7;
    let mut total = 0.0;
    for n in 0..prob.len() {
        let p = prob[n].clamp(eps, 1.0 - eps);
        total += if target[n] == 1.0 {
            -p.ln()
        } else {
            -(1.0 - p).ln()
        };
    }
    total / prob.len() as f64
}

pub struct GateWeights<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
}

/// Scalar 16-unit GRU with sigmoid candidate; matrices are row-major out x in.
pub fn gru_cell(
    x: &[f64],
    h: &[f64],
    z: &GateWeights,
    r: &GateWeights,
    c: &GateWeights,
) -> Vec<f64> {
    let n = h.len();
    let affine = |g: &GateWeights, x: &[f64], h: &[f64], o: usize| {
        let mut acc = g.b[o];
        for k in 0..x.len() {
            acc += g.w[o * x.len() + k] * x[k];
        }
        for k in 0..n {
            acc += g.u[o * n + k] * h[k];
        }
        acc
    };
    let zg: Vec<f64> = (0..n).map(|o| sigmoid(affine(z, x, h, o))).collect();
    let rg: Vec<f64> = (0..n).map(|o| sigmoid(affine(r, x, h, o))).collect();
    let rh: Vec<f64> = (0..n).map(|o| rg[o] * h[o]).collect();
    let cand: Vec<f64> = (0..n).map(|o| sigmoid(affine(c, x, &rh, o))).collect();
    (0..n)
        .map(|o| (1.0 - zg[o]) * h[o] + zg[o] * cand[o])
        .collect()
}

fn p<'a>(model: &'a Model, name: &str) -> &'a [f64] {
    model.param(name).data()
}

pub fn encoder(model: &Model, measurement: &GridFrame, label: &GridFrame) -> Vec<f64> {
    let (h, w) = measurement.extent();
    let mut input = measurement.to_f64();
    input.extend(label.to_f64());
    conv_same(
        &input,
        2,
        h,
        w,
        p(model, "encoder.kernel"),
        HIDDEN,
        6,
        Some(p(model, "encoder.bias")),
    )
    .into_iter()
    .map(sigmoid)
    .collect()
}

/// KGA recurrent step, cell by cell.
pub fn kga_recurrent(
    model: &Model,
    features: &[f64],
    hidden: &[f64],
    h: usize,
    w: usize,
) -> Vec<f64> {
    let hw = h * w;
    let gate = |s: &str| GateWeights {
        w: p(model, &format!("gru.w_{s}")),
        u: p(model, &format!("gru.u_{s}")),
        b: p(model, &format!("gru.b_{s}")),
    };
    let (z, r, c) = (gate("z"), gate("r"), gate("h"));
    let mut out = vec![0.0; HIDDEN * hw];
    for cell in 0..hw {
        let x: Vec<f64> = (0..HIDDEN).map(|k| features[k * hw + cell]).collect();
        let hv: Vec<f64> = (0..HIDDEN).map(|k| hidden[k * hw + cell]).collect();
        for (k, v) in gru_cell(&x, &hv, &z, &r, &c).into_iter().enumerate() {
            out[k * hw + cell] = v;
        }
    }
    out
}

/// ConvGRU recurrent step with loop convolutions.
pub fn convgru_recurrent(
    model: &Model,
    features: &[f64],
    hidden: &[f64],
    h: usize,
    w: usize,
) -> Vec<f64> {
    let conv = |x: &[f64], name: &str, bias: Option<&str>| {
        conv_same(
            x,
            HIDDEN,
            h,
            w,
            p(model, name),
            HIDDEN,
            3,
            bias.map(|b| p(model, b)),
        )
    };
    let gate = |x: &[f64], hh: &[f64], s: &str| -> Vec<f64> {
        let a = conv(x, &format!("gru.w_{s}"), Some(&format!("gru.b_{s}")));
        let b = conv(hh, &format!("gru.u_{s}"), None);
        a.iter().zip(&b).map(|(a, b)| sigmoid(a + b)).collect()
    };
    let z = gate(features, hidden, "z");
    let r = gate(features, hidden, "r");
    let rh: Vec<f64> = r.iter().zip(hidden).map(|(r, h)| r * h).collect();
    let cand = gate(features, &rh, "h");
    (0..hidden.len())
        .map(|n| (1.0 - z[n]) * hidden[n] + z[n] * cand[n])
        .collect()
}

pub fn decoder(model: &Model, hidden: &[f64], h: usize, w: usize) -> Vec<f64> {
    let logits = conv_same(
        hidden,
        HIDDEN,
        h,
        w,
        p(model, "decoder.kernel"),
        2,
        6,
        Some(p(model, "decoder.bias")),
    );
    (0..h * w)
        .map(|n| softmax2(logits[n], logits[h * w + n]).0)
        .collect()
}

/// Full predict/correct step; returns (prob, hidden', label').
pub fn step(
    model: &Model,
    measurement: &GridFrame,
    hidden: &[f64],
    label: &GridFrame,
) -> (Vec<f64>, Vec<f64>, GridFrame) {
    let (h, w) = measurement.extent();
    let features = encoder(model, measurement, label);
    let next = match model.arch() {
        Architecture::Kga => kga_recurrent(model, &features, hidden, h, w),
        Architecture::ConvGru => convgru_recurrent(model, &features, hidden, h, w),
    };
    let prob = decoder(model, &next, h, w);
    let cells = prob.iter().map(|&q| u8::from(q >= 0.5)).collect();
    (prob, next, GridFrame::from_cells(h, w, cells).unwrap())
}
