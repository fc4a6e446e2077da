//! One decoding step under restricted source visibility. The decoder input
//! is BOS followed by the emitted prefix; cross-attention sees only the
//! first `visible` encoder positions, so the returned distribution cannot
//! depend on anything the policy has not read yet.

use super::config::positional_encoding_row;
use super::encoder::EncoderState;
use super::math::{attend_one, layer_norm_row, linear_rows};
use super::{ModelError, Parameters};
use crate::numerics::logsumexp;
use crate::{TokenId, BOS_ID};

/// Log-probabilities over the vocabulary for the next target token.
pub fn decoder_step(
    params: &Parameters,
    enc: &EncoderState,
    visible: usize,
    tgt_prefix: &[TokenId],
) -> Result<Vec<f64>, ModelError> {
    let cfg = params.config();
    if visible > enc.positions() {
        return Err(ModelError::VisibleExceedsEncoded {
            visible,
            encoded: enc.positions(),
        });
    }
    if visible == 0 {
        return Err(ModelError::NoVisibleSource);
    }
    let t = tgt_prefix.len() + 1;
    if t > cfg.max_positions {
        return Err(ModelError::PositionOverflow {
            len: t,
            max: cfg.max_positions,
        });
    }
    for &tok in tgt_prefix {
        if tok >= cfg.vocab_size {
            return Err(ModelError::Oov {
                id: tok,
                vocab: cfg.vocab_size,
            });
        }
    }

    let d = cfg.d_model;
    let embed = params.get("tgt_embed");
    let sqrt_d = (d as f64).sqrt();
    let mut h = vec![0.0; t * d];
    let mut pe = vec![0.0; d];
    let input = std::iter::once(BOS_ID).chain(tgt_prefix.iter().copied());
    for (i, tok) in input.enumerate() {
        positional_encoding_row(i, d, &mut pe);
        let erow = &embed.data()[tok * d..(tok + 1) * d];
        for j in 0..d {
            h[i * d + j] = erow[j] * sqrt_d + pe[j];
        }
    }

    let mut normed = vec![0.0; t * d];
    let mut q = vec![0.0; t * d];
    let mut keys = vec![0.0; t * d];
    let mut vals = vec![0.0; t * d];
    let mut attn = vec![0.0; t * d];
    let mut proj = vec![0.0; t * d];
    let mut ff = vec![0.0; t * cfg.d_ff];
    let mut cross_k = vec![0.0; visible * d];
    let mut cross_v = vec![0.0; visible * d];
    let mut scores = Vec::new();
    let mut probs = Vec::new();

    for l in 0..cfg.dec_layers {
        let p = |n: &str| params.get(&format!("dec.{l}.{n}"));

        for i in 0..t {
            layer_norm_row(
                &h[i * d..(i + 1) * d],
                p("self_norm.gain"),
                p("self_norm.bias"),
                &mut normed[i * d..(i + 1) * d],
            );
        }
        linear_rows(&normed, t, p("self_attn.wq"), p("self_attn.bq"), &mut q);
        linear_rows(&normed, t, p("self_attn.wk"), p("self_attn.bk"), &mut keys);
        linear_rows(&normed, t, p("self_attn.wv"), p("self_attn.bv"), &mut vals);
        for i in 0..t {
            attend_one(
                &q[i * d..(i + 1) * d],
                &keys,
                &vals,
                i + 1,
                cfg.heads,
                &mut attn[i * d..(i + 1) * d],
                &mut scores,
                &mut probs,
            );
        }
        linear_rows(&attn, t, p("self_attn.wo"), p("self_attn.bo"), &mut proj);
        for (hv, pv) in h.iter_mut().zip(&proj) {
            *hv += pv;
        }

        for i in 0..t {
            layer_norm_row(
                &h[i * d..(i + 1) * d],
                p("cross_norm.gain"),
                p("cross_norm.bias"),
                &mut normed[i * d..(i + 1) * d],
            );
        }
        linear_rows(&normed, t, p("cross_attn.wq"), p("cross_attn.bq"), &mut q);
        let src = &enc.outputs()[..visible * d];
        linear_rows(src, visible, p("cross_attn.wk"), p("cross_attn.bk"), &mut cross_k);
        linear_rows(src, visible, p("cross_attn.wv"), p("cross_attn.bv"), &mut cross_v);
        for i in 0..t {
            attend_one(
                &q[i * d..(i + 1) * d],
                &cross_k,
                &cross_v,
                visible,
                cfg.heads,
                &mut attn[i * d..(i + 1) * d],
                &mut scores,
                &mut probs,
            );
        }
        linear_rows(&attn, t, p("cross_attn.wo"), p("cross_attn.bo"), &mut proj);
        for (hv, pv) in h.iter_mut().zip(&proj) {
            *hv += pv;
        }

        for i in 0..t {
            layer_norm_row(
                &h[i * d..(i + 1) * d],
                p("ffn_norm.gain"),
                p("ffn_norm.bias"),
                &mut normed[i * d..(i + 1) * d],
            );
        }
        linear_rows(&normed, t, p("ffn.w1"), p("ffn.b1"), &mut ff);
        for v in ff.iter_mut() {
            *v = v.max(0.0);
        }
        linear_rows(&ff, t, p("ffn.w2"), p("ffn.b2"), &mut proj);
        for (hv, pv) in h.iter_mut().zip(&proj) {
            *hv += pv;
        }
    }

    let mut last = vec![0.0; d];
    layer_norm_row(
        &h[(t - 1) * d..t * d],
        params.get("dec_norm.gain"),
        params.get("dec_norm.bias"),
        &mut last,
    );

    // Tied output projection: logits = h_last @ tgt_embed^T
    let v = cfg.vocab_size;
    let ed = embed.data();
    let mut logits = vec![0.0; v];
    for (tok, logit) in logits.iter_mut().enumerate() {
        let erow = &ed[tok * d..(tok + 1) * d];
        let mut s = 0.0;
        for j in 0..d {
            s += last[j] * erow[j];
        }
        *logit = s;
    }
    let lse = logsumexp(&logits);
    for l in logits.iter_mut() {
        *l -= lse;
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::Numerics(
            crate::numerics::NumericsError::NonFinite { op: "decoder_step" },
        ));
    }
    Ok(logits)
}
