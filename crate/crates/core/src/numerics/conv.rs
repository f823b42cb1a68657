//! Same-padded 2-D convolution kernels.
//!
//! Planes are copied into a zero-padded buffer whose row stride is the padded
//! width, so that every kernel tap becomes a single contiguous multiply-add
//! over `height * padded_width` elements. Columns past the true width are
//! scratch and are discarded (forward) or held at zero (backward).

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeometry {
    pub c_in: usize,
    pub c_out: usize,
    pub height: usize,
    pub width: usize,
    pub k: usize,
}

impl ConvGeometry {
    /// Rows/columns of zeros before the data. Even kernels put the extra
    /// padding row/column at the bottom/right.
    fn pad_before(&self) -> usize {
        (self.k - 1) / 2
    }

    fn padded_width(&self) -> usize {
        self.width + self.k - 1
    }

    fn padded_plane(&self) -> usize {
        (self.height + self.k - 1) * self.padded_width()
    }

    /// Length of one output plane in padded-stride layout.
    fn strided_plane(&self) -> usize {
        self.height * self.padded_width()
    }

    fn padded_len(&self) -> usize {
        self.c_in * self.padded_plane() + self.k
    }

    fn pad_input(&self, input: &[f64]) -> Vec<f64> {
        let (h, w, wp, p) = (
            self.height,
            self.width,
            self.padded_width(),
            self.pad_before(),
        );
        let mut padded = vec![0.0; self.padded_len()];
        for c in 0..self.c_in {
            let plane = &mut padded[c * self.padded_plane()..];
            for i in 0..h {
                let dst = (i + p) * wp + p;
                plane[dst..dst + w].copy_from_slice(&input[(c * h + i) * w..][..w]);
            }
        }
        padded
    }

    /// Output gradient re-laid into padded stride with zeroed scratch columns.
    fn stride_output(&self, grad_out: &[f64]) -> Vec<f64> {
        let (h, w, wp) = (self.height, self.width, self.padded_width());
        let mut strided = vec![0.0; self.c_out * self.strided_plane()];
        for o in 0..self.c_out {
            for i in 0..h {
                strided[o * self.strided_plane() + i * wp..][..w]
                    .copy_from_slice(&grad_out[(o * h + i) * w..][..w]);
            }
        }
        strided
    }

    fn tap_offset(&self, u: usize, v: usize) -> usize {
        u * self.padded_width() + v
    }
}

const BLOCK: usize = 16;

/// `out[n] = init + Σ_t weights[t] * src[offsets[t] + n]`, summed in tap order.
/// Accumulators for a block of outputs stay in registers across all taps.
fn correlate(out: &mut [f64], init: f64, src: &[f64], taps: &[(usize, f64)]) {
    let len = out.len();
    let mut start = 0;
    while start + BLOCK <= len {
        let mut acc = [init; BLOCK];
        for &(offset, weight) in taps {
            let x = &src[offset + start..][..BLOCK];
            for lane in 0..BLOCK {
                acc[lane] += weight * x[lane];
            }
        }
        out[start..start + BLOCK].copy_from_slice(&acc);
        start += BLOCK;
    }
    for n in start..len {
        let mut acc = init;
        for &(offset, weight) in taps {
            acc += weight * src[offset + n];
        }
        out[n] = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for n in 0..chunks {
        for lane in 0..4 {
            acc[lane] += a[4 * n + lane] * b[4 * n + lane];
        }
    }
    let mut tail = 0.0;
    for n in 4 * chunks..a.len() {
        tail += a[n] * b[n];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn forward(
    geom: &ConvGeometry,
    input: &[f64],
    kernel: &[f64],
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let padded = geom.pad_input(input);
    let (k, plane_len) = (geom.k, geom.strided_plane());
    let mut strided = vec![0.0; plane_len];
    let mut taps = Vec::with_capacity(geom.c_in * k * k);
    let mut out = Vec::with_capacity(geom.c_out * geom.height * geom.width);
    for o in 0..geom.c_out {
        taps.clear();
        for c in 0..geom.c_in {
            for u in 0..k {
                for v in 0..k {
                    let weight = kernel[((o * geom.c_in + c) * k + u) * k + v];
                    taps.push((c * geom.padded_plane() + geom.tap_offset(u, v), weight));
                }
            }
        }
        correlate(&mut strided, bias.map_or(0.0, |b| b[o]), &padded, &taps);
        for i in 0..geom.height {
            out.extend_from_slice(&strided[i * geom.padded_width()..][..geom.width]);
        }
    }
    out
}

/// Gradients with respect to (input, kernel, bias). The input gradient is
/// only computed when requested.
pub(crate) fn backward(
    geom: &ConvGeometry,
    input: &[f64],
    kernel: &[f64],
    grad_out: &[f64],
    want_input: bool,
) -> (Option<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let padded = geom.pad_input(input);
    let strided = geom.stride_output(grad_out);
    let (k, plane_len) = (geom.k, geom.strided_plane());
    let hw = geom.height * geom.width;

    let grad_bias: Vec<f64> = (0..geom.c_out)
        .map(|o| grad_out[o * hw..][..hw].iter().sum())
        .collect();

    let mut grad_kernel = vec![0.0; kernel.len()];
    for o in 0..geom.c_out {
        let g = &strided[o * plane_len..][..plane_len];
        for c in 0..geom.c_in {
            for u in 0..k {
                for v in 0..k {
                    let at = c * geom.padded_plane() + geom.tap_offset(u, v);
                    grad_kernel[((o * geom.c_in + c) * k + u) * k + v] +=
                        dot(g, &padded[at..][..plane_len]);
                }
            }
        }
    }

    let grad_input = want_input.then(|| {
        // Output gradients with `max_offset` zeros on both sides, so the
        // transposed convolution is again a plain correlation.
        let max_offset = geom.tap_offset(k - 1, k - 1);
        let ext_len = geom.padded_plane() + max_offset;
        let mut ext = vec![0.0; geom.c_out * ext_len];
        for o in 0..geom.c_out {
            ext[o * ext_len + max_offset..][..plane_len]
                .copy_from_slice(&strided[o * plane_len..][..plane_len]);
        }
        let (h, w, wp, p) = (
            geom.height,
            geom.width,
            geom.padded_width(),
            geom.pad_before(),
        );
        let mut plane = vec![0.0; geom.padded_plane()];
        let mut taps = Vec::with_capacity(geom.c_out * k * k);
        let mut gi = Vec::with_capacity(geom.c_in * hw);
        for c in 0..geom.c_in {
            taps.clear();
            for o in 0..geom.c_out {
                for u in 0..k {
                    for v in 0..k {
                        let weight = kernel[((o * geom.c_in + c) * k + u) * k + v];
                        taps.push((o * ext_len + max_offset - geom.tap_offset(u, v), weight));
                    }
                }
            }
            correlate(&mut plane, 0.0, &ext, &taps);
            for i in 0..h {
                gi.extend_from_slice(&plane[(i + p) * wp + p..][..w]);
            }
        }
        gi
    });
    (grad_input, grad_kernel, grad_bias)
}
