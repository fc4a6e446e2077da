//! Unidirectional source encoder. Position i depends only on tokens 1..i,
//! so reading one more token appends to per-layer key/value caches without
//! touching anything already computed.

use super::config::positional_encoding_row;
use super::math::{attend_one, layer_norm_row, linear_row, linear_rows};
use super::{ModelError, Parameters};
use crate::TokenId;

#[derive(Clone, Debug)]
pub struct EncoderState {
    d_model: usize,
    heads: usize,
    layers: Vec<LayerCache>,
    outputs: Vec<f64>,
    positions: usize,
}

#[derive(Clone, Debug, Default)]
struct LayerCache {
    k: Vec<f64>,
    v: Vec<f64>,
}

impl EncoderState {
    pub fn empty(params: &Parameters) -> Self {
        let cfg = params.config();
        Self {
            d_model: cfg.d_model,
            heads: cfg.heads,
            layers: vec![LayerCache::default(); cfg.enc_layers],
            outputs: Vec::new(),
            positions: 0,
        }
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    /// Final representations, [positions, d_model] row-major.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Per-layer self-attention cache, [positions, d_model] each.
    pub fn layer_kv(&self, layer: usize) -> (&[f64], &[f64]) {
        (&self.layers[layer].k, &self.layers[layer].v)
    }
}

fn check_tokens(params: &Parameters, tokens: &[TokenId], new_len: usize) -> Result<(), ModelError> {
    let cfg = params.config();
    if new_len > cfg.max_positions {
        return Err(ModelError::PositionOverflow {
            len: new_len,
            max: cfg.max_positions,
        });
    }
    for &t in tokens {
        if t >= cfg.vocab_size {
            return Err(ModelError::Oov {
                id: t,
                vocab: cfg.vocab_size,
            });
        }
    }
    Ok(())
}

/// Encode a whole source prefix with batched matrix ops.
pub fn encode_full(params: &Parameters, src: &[TokenId]) -> Result<EncoderState, ModelError> {
    check_tokens(params, src, src.len())?;
    let cfg = params.config();
    let (s, d) = (src.len(), cfg.d_model);
    let mut state = EncoderState::empty(params);
    if s == 0 {
        return Ok(state);
    }

    let embed = params.get("src_embed");
    let sqrt_d = (d as f64).sqrt();
    let mut h = vec![0.0; s * d];
    let mut pe = vec![0.0; d];
    for (i, &tok) in src.iter().enumerate() {
        positional_encoding_row(i, d, &mut pe);
        let erow = &embed.data()[tok * d..(tok + 1) * d];
        for j in 0..d {
            h[i * d + j] = erow[j] * sqrt_d + pe[j];
        }
    }

    let mut normed = vec![0.0; s * d];
    let mut q = vec![0.0; s * d];
    let mut attn = vec![0.0; s * d];
    let mut proj = vec![0.0; s * d];
    let mut ff = vec![0.0; s * cfg.d_ff];
    let mut scores = Vec::new();
    let mut probs = Vec::new();

    for l in 0..cfg.enc_layers {
        let p = |n: &str| params.get(&format!("enc.{l}.{n}"));
        for i in 0..s {
            layer_norm_row(
                &h[i * d..(i + 1) * d],
                p("attn_norm.gain"),
                p("attn_norm.bias"),
                &mut normed[i * d..(i + 1) * d],
            );
        }
        linear_rows(&normed, s, p("attn.wq"), p("attn.bq"), &mut q);
        let cache = &mut state.layers[l];
        cache.k.resize(s * d, 0.0);
        cache.v.resize(s * d, 0.0);
        linear_rows(&normed, s, p("attn.wk"), p("attn.bk"), &mut cache.k);
        linear_rows(&normed, s, p("attn.wv"), p("attn.bv"), &mut cache.v);
        let cache = &state.layers[l];
        for i in 0..s {
            // causal: row i attends to positions 0..=i
            attend_one(
                &q[i * d..(i + 1) * d],
                &cache.k,
                &cache.v,
                i + 1,
                cfg.heads,
                &mut attn[i * d..(i + 1) * d],
                &mut scores,
                &mut probs,
            );
        }
        linear_rows(&attn, s, p("attn.wo"), p("attn.bo"), &mut proj);
        for (hv, pv) in h.iter_mut().zip(&proj) {
            *hv += pv;
        }

        for i in 0..s {
            layer_norm_row(
                &h[i * d..(i + 1) * d],
                p("ffn_norm.gain"),
                p("ffn_norm.bias"),
                &mut normed[i * d..(i + 1) * d],
            );
        }
        linear_rows(&normed, s, p("ffn.w1"), p("ffn.b1"), &mut ff);
        for v in ff.iter_mut() {
            *v = v.max(0.0);
        }
        linear_rows(&ff, s, p("ffn.w2"), p("ffn.b2"), &mut proj);
        for (hv, pv) in h.iter_mut().zip(&proj) {
            *hv += pv;
        }
    }

    state.outputs.resize(s * d, 0.0);
    for i in 0..s {
        layer_norm_row(
            &h[i * d..(i + 1) * d],
            params.get("enc_norm.gain"),
            params.get("enc_norm.bias"),
            &mut state.outputs[i * d..(i + 1) * d],
        );
    }
    state.positions = s;
    for (l, cache) in state.layers.iter().enumerate() {
        debug_assert_eq!(cache.k.len(), s * d, "layer {l} cache length");
    }
    if state.outputs.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Numerics(
            crate::numerics::NumericsError::NonFinite { op: "encode_full" },
        ));
    }
    Ok(state)
}

/// Append one source token to an existing state. The resulting caches and
/// outputs match `encode_full` over the extended prefix; previously cached
/// positions are never touched.
pub fn encode_incremental(
    state: &mut EncoderState,
    params: &Parameters,
    token: TokenId,
) -> Result<(), ModelError> {
    check_tokens(params, &[token], state.positions + 1)?;
    let cfg = params.config();
    let d = cfg.d_model;
    debug_assert_eq!(state.d_model, d);
    debug_assert_eq!(state.heads, cfg.heads);
    let pos = state.positions;

    let embed = params.get("src_embed");
    let sqrt_d = (d as f64).sqrt();
    let mut h = vec![0.0; d];
    let mut pe = vec![0.0; d];
    positional_encoding_row(pos, d, &mut pe);
    let erow = &embed.data()[token * d..(token + 1) * d];
    for j in 0..d {
        h[j] = erow[j] * sqrt_d + pe[j];
    }

    let mut normed = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut kv = vec![0.0; d];
    let mut attn = vec![0.0; d];
    let mut proj = vec![0.0; d];
    let mut ff = vec![0.0; cfg.d_ff];
    let mut scores = Vec::new();
    let mut probs = Vec::new();

    for l in 0..cfg.enc_layers {
        let p = |n: &str| params.get(&format!("enc.{l}.{n}"));
        layer_norm_row(&h, p("attn_norm.gain"), p("attn_norm.bias"), &mut normed);
        linear_row(&normed, p("attn.wq"), p("attn.bq"), &mut q);
        linear_row(&normed, p("attn.wk"), p("attn.bk"), &mut kv);
        state.layers[l].k.extend_from_slice(&kv);
        linear_row(&normed, p("attn.wv"), p("attn.bv"), &mut kv);
        state.layers[l].v.extend_from_slice(&kv);
        let cache = &state.layers[l];
        attend_one(
            &q,
            &cache.k,
            &cache.v,
            pos + 1,
            cfg.heads,
            &mut attn,
            &mut scores,
            &mut probs,
        );
        linear_row(&attn, p("attn.wo"), p("attn.bo"), &mut proj);
        for j in 0..d {
            h[j] += proj[j];
        }

        layer_norm_row(&h, p("ffn_norm.gain"), p("ffn_norm.bias"), &mut normed);
        linear_row(&normed, p("ffn.w1"), p("ffn.b1"), &mut ff);
        for v in ff.iter_mut() {
            *v = v.max(0.0);
        }
        linear_row(&ff, p("ffn.w2"), p("ffn.b2"), &mut proj);
        for j in 0..d {
            h[j] += proj[j];
        }
    }

    let mut out = vec![0.0; d];
    layer_norm_row(
        &h,
        params.get("enc_norm.gain"),
        params.get("enc_norm.bias"),
        &mut out,
    );
    if out.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Numerics(
            crate::numerics::NumericsError::NonFinite {
                op: "encode_incremental",
            },
        ));
    }
    state.outputs.extend_from_slice(&out);
    state.positions += 1;
    Ok(())
}
