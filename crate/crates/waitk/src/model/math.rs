//! Plain f64 helpers for the inference path (no tape, no gradients).

use crate::numerics::{softmax_into, Tensor};

/// out = x @ w + b for a single row; w is [d_in, d_out].
pub(crate) fn linear_row(x: &[f64], w: &Tensor, b: &Tensor, out: &mut [f64]) {
    let (d_in, d_out) = (w.shape()[0], w.shape()[1]);
    debug_assert_eq!(x.len(), d_in);
    out[..d_out].copy_from_slice(b.data());
    let wd = w.data();
    for (p, &xv) in x.iter().enumerate() {
        let wrow = &wd[p * d_out..(p + 1) * d_out];
        for j in 0..d_out {
            out[j] += xv * wrow[j];
        }
    }
}

/// Row-major batch of `linear_row` over `rows` rows.
pub(crate) fn linear_rows(xs: &[f64], rows: usize, w: &Tensor, b: &Tensor, out: &mut [f64]) {
    let (d_in, d_out) = (w.shape()[0], w.shape()[1]);
    for i in 0..rows {
        linear_row(
            &xs[i * d_in..(i + 1) * d_in],
            w,
            b,
            &mut out[i * d_out..(i + 1) * d_out],
        );
    }
}

/// Multi-head scaled dot-product attention for one query position over the
/// first `npos` cached key/value rows. `keys`/`vals` are [npos, d] row-major.
pub(crate) fn attend_one(
    q: &[f64],
    keys: &[f64],
    vals: &[f64],
    npos: usize,
    heads: usize,
    out: &mut [f64],
    scores: &mut Vec<f64>,
    probs: &mut Vec<f64>,
) {
    let d = q.len();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    scores.resize(npos, 0.0);
    probs.resize(npos, 0.0);
    for h in 0..heads {
        let off = h * dh;
        let qh = &q[off..off + dh];
        for j in 0..npos {
            let krow = &keys[j * d + off..j * d + off + dh];
            let mut s = 0.0;
            for p in 0..dh {
                s += qh[p] * krow[p];
            }
            scores[j] = s * scale;
        }
        softmax_into(&scores[..npos], &mut probs[..npos]);
        let oh = &mut out[off..off + dh];
        oh.fill(0.0);
        for j in 0..npos {
            let vrow = &vals[j * d + off..j * d + off + dh];
            let pj = probs[j];
            for p in 0..dh {
                oh[p] += pj * vrow[p];
            }
        }
    }
}

pub(crate) fn layer_norm_row(x: &[f64], gain: &Tensor, bias: &Tensor, out: &mut [f64]) {
    crate::numerics::layer_norm_into(x, gain.data(), bias.data(), LN_EPS, out);
}

/// Shared layer-norm epsilon for both the training and inference paths.
pub(crate) const LN_EPS: f64 = 1e-5;
