//! Teacher-forcing training graphs. The encoder is built once per sentence
//! with a causal source mask, so it is independent of k; the drawn k only
//! shapes the cross-attention visibility, which is the point of training a
//! single model for many latency operating points.

use super::config::positional_encoding_row;
use super::math::LN_EPS;
use super::{visible_sources, ModelError, MultipathRange, Parameters, WaitK};
use crate::numerics::{NamedTensors, Tape, Tensor, Var};
use crate::{TokenId, BOS_ID, EOS_ID};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct LossOptions {
    pub label_smoothing: f64,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self {
            label_smoothing: 0.1,
        }
    }
}

/// One training pair of token ids (no BOS/EOS; those are added here).
pub type Pair = (Vec<TokenId>, Vec<TokenId>);

/// Draw one k uniformly from the range for the whole batch, then compute the
/// wait-k loss. Deterministic in (params, batch, seed).
pub fn multipath_loss(
    params: &Parameters,
    batch: &[Pair],
    range: MultipathRange,
    seed: u64,
) -> Result<(f64, NamedTensors), ModelError> {
    multipath_loss_with(params, batch, range, seed, &LossOptions::default())
}

pub fn multipath_loss_with(
    params: &Parameters,
    batch: &[Pair],
    range: MultipathRange,
    seed: u64,
    opts: &LossOptions,
) -> Result<(f64, NamedTensors), ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = WaitK::Bounded(range.sample(&mut rng));
    let dropout_seed: u64 = rng.gen();
    waitk_loss_with(params, batch, k, dropout_seed, opts)
}

/// Wait-k loss at a fixed k (`WaitK::Unbounded` is the offline loss).
pub fn waitk_loss(
    params: &Parameters,
    batch: &[Pair],
    k: WaitK,
    dropout_seed: u64,
) -> Result<(f64, NamedTensors), ModelError> {
    waitk_loss_with(params, batch, k, dropout_seed, &LossOptions::default())
}

pub fn waitk_loss_with(
    params: &Parameters,
    batch: &[Pair],
    k: WaitK,
    dropout_seed: u64,
    opts: &LossOptions,
) -> Result<(f64, NamedTensors), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let cfg = params.config();
    let mut builder = GraphBuilder {
        tape: Tape::new(),
        vars: BTreeMap::new(),
        params,
        dropout_rng: ChaCha8Rng::seed_from_u64(dropout_seed),
        p_drop: cfg.dropout,
    };
    for (name, t) in params.tensors() {
        let var = builder.tape.leaf(t.clone());
        builder.vars.insert(name.clone(), var);
    }

    let mut sentence_losses = Vec::with_capacity(batch.len());
    let mut total_tokens = 0usize;
    for (src, tgt) in batch {
        if src.is_empty() {
            return Err(ModelError::EmptySource);
        }
        check_tokens(cfg, src)?;
        check_tokens(cfg, tgt)?;
        if src.len() > cfg.max_positions || tgt.len() + 1 > cfg.max_positions {
            return Err(ModelError::PositionOverflow {
                len: src.len().max(tgt.len() + 1),
                max: cfg.max_positions,
            });
        }
        let enc_out = builder.encoder(src)?;
        let ce = builder.decoder_loss(enc_out, src.len(), tgt, k, opts.label_smoothing)?;
        sentence_losses.push(ce);
        total_tokens += tgt.len() + 1;
    }

    let total = builder.tape.add_n(&sentence_losses)?;
    let loss = builder.tape.scale(total, 1.0 / total_tokens as f64)?;
    builder.tape.backward(loss)?;

    let mut grads = NamedTensors::new();
    for (name, var) in &builder.vars {
        let shape = params.tensors()[name].shape().to_vec();
        let t = match builder.tape.grad(*var) {
            Some(g) => Tensor::new(shape, g.to_vec())?,
            None => Tensor::zeros(shape),
        };
        grads.insert(name.clone(), t);
    }
    Ok((builder.tape.value(loss).data()[0], grads))
}

fn check_tokens(cfg: &super::ModelConfig, tokens: &[TokenId]) -> Result<(), ModelError> {
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

struct GraphBuilder<'a> {
    tape: Tape,
    vars: BTreeMap<String, Var>,
    params: &'a Parameters,
    dropout_rng: ChaCha8Rng,
    p_drop: f64,
}

impl GraphBuilder<'_> {
    fn var(&self, name: &str) -> Var {
        *self
            .vars
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} missing"))
    }

    fn maybe_dropout(&mut self, x: Var) -> Result<Var, ModelError> {
        if self.p_drop == 0.0 {
            return Ok(x);
        }
        let n = self.tape.value(x).len();
        let keep = 1.0 / (1.0 - self.p_drop);
        let mask: Vec<f64> = (0..n)
            .map(|_| {
                if self.dropout_rng.gen::<f64>() < self.p_drop {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        Ok(self.tape.dropout(x, mask)?)
    }

    fn linear(&mut self, x: Var, w: &str, b: &str) -> Result<Var, ModelError> {
        let wv = self.var(w);
        let bv = self.var(b);
        let y = self.tape.matmul(x, wv)?;
        Ok(self.tape.add_row(y, bv)?)
    }

    fn layer_norm(&mut self, x: Var, prefix: &str) -> Result<Var, ModelError> {
        let gain = self.var(&format!("{prefix}.gain"));
        let bias = self.var(&format!("{prefix}.bias"));
        Ok(self.tape.layer_norm_rows(x, gain, bias, LN_EPS)?)
    }

    fn embed_with_positions(&mut self, table: &str, ids: &[TokenId]) -> Result<Var, ModelError> {
        let cfg = self.params.config();
        let d = cfg.d_model;
        let table = self.var(table);
        let emb = self.tape.gather_rows(table, ids.to_vec())?;
        let scaled = self.tape.scale(emb, (d as f64).sqrt())?;
        let mut pe = vec![0.0; ids.len() * d];
        for i in 0..ids.len() {
            positional_encoding_row(i, d, &mut pe[i * d..(i + 1) * d]);
        }
        let pe = Tensor::new(vec![ids.len(), d], pe)?;
        let x = self.tape.add_const(scaled, pe)?;
        self.maybe_dropout(x)
    }

    /// Multi-head attention block: queries from `q_in`, keys/values from
    /// `kv_in`, with row i attending to the first `allowed[i]` kv rows.
    fn attention(
        &mut self,
        q_in: Var,
        kv_in: Var,
        prefix: &str,
        allowed: &[usize],
    ) -> Result<Var, ModelError> {
        let cfg = self.params.config();
        let (heads, dh) = (cfg.heads, cfg.head_dim());
        let q = self.linear(q_in, &format!("{prefix}.wq"), &format!("{prefix}.bq"))?;
        let k = self.linear(kv_in, &format!("{prefix}.wk"), &format!("{prefix}.bk"))?;
        let v = self.linear(kv_in, &format!("{prefix}.wv"), &format!("{prefix}.bv"))?;
        let mut ctxs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = self.tape.slice_cols(q, h * dh, dh)?;
            let kh = self.tape.slice_cols(k, h * dh, dh)?;
            let vh = self.tape.slice_cols(v, h * dh, dh)?;
            let scores = self.tape.matmul_nt(qh, kh)?;
            let scaled = self.tape.scale(scores, 1.0 / (dh as f64).sqrt())?;
            let probs = self.tape.softmax_prefix_rows(scaled, allowed.to_vec())?;
            ctxs.push(self.tape.matmul(probs, vh)?);
        }
        let ctx = self.tape.concat_cols(&ctxs)?;
        self.linear(ctx, &format!("{prefix}.wo"), &format!("{prefix}.bo"))
    }

    fn ffn(&mut self, x: Var, prefix: &str) -> Result<Var, ModelError> {
        let hidden = self.linear(x, &format!("{prefix}.w1"), &format!("{prefix}.b1"))?;
        let act = self.tape.relu(hidden)?;
        self.linear(act, &format!("{prefix}.w2"), &format!("{prefix}.b2"))
    }

    /// Causal encoder over the full source; returns [s, d] representations.
    fn encoder(&mut self, src: &[TokenId]) -> Result<Var, ModelError> {
        let cfg = self.params.config();
        let mut h = self.embed_with_positions("src_embed", src)?;
        let causal: Vec<usize> = (1..=src.len()).collect();
        for l in 0..cfg.enc_layers {
            let normed = self.layer_norm(h, &format!("enc.{l}.attn_norm"))?;
            let attn = self.attention(normed, normed, &format!("enc.{l}.attn"), &causal)?;
            let attn = self.maybe_dropout(attn)?;
            h = self.tape.add(h, attn)?;
            let normed = self.layer_norm(h, &format!("enc.{l}.ffn_norm"))?;
            let ff = self.ffn(normed, &format!("enc.{l}.ffn"))?;
            let ff = self.maybe_dropout(ff)?;
            h = self.tape.add(h, ff)?;
        }
        self.layer_norm(h, "enc_norm")
    }

    /// Summed label-smoothed cross entropy of one sentence under wait-k
    /// cross-attention masking.
    fn decoder_loss(
        &mut self,
        enc_out: Var,
        src_len: usize,
        tgt: &[TokenId],
        k: WaitK,
        smoothing: f64,
    ) -> Result<Var, ModelError> {
        let cfg = self.params.config();
        let input: Vec<TokenId> = std::iter::once(BOS_ID).chain(tgt.iter().copied()).collect();
        let targets: Vec<TokenId> = tgt.iter().copied().chain(std::iter::once(EOS_ID)).collect();
        let t = input.len();

        let mut h = self.embed_with_positions("tgt_embed", &input)?;
        let causal: Vec<usize> = (1..=t).collect();
        let mut cross_allowed = Vec::with_capacity(t);
        for i in 0..t {
            cross_allowed.push(visible_sources(k, i + 1, src_len)?.max(1));
        }
        for l in 0..cfg.dec_layers {
            let normed = self.layer_norm(h, &format!("dec.{l}.self_norm"))?;
            let attn = self.attention(normed, normed, &format!("dec.{l}.self_attn"), &causal)?;
            let attn = self.maybe_dropout(attn)?;
            h = self.tape.add(h, attn)?;

            let normed = self.layer_norm(h, &format!("dec.{l}.cross_norm"))?;
            let attn =
                self.attention(normed, enc_out, &format!("dec.{l}.cross_attn"), &cross_allowed)?;
            let attn = self.maybe_dropout(attn)?;
            h = self.tape.add(h, attn)?;

            let normed = self.layer_norm(h, &format!("dec.{l}.ffn_norm"))?;
            let ff = self.ffn(normed, &format!("dec.{l}.ffn"))?;
            let ff = self.maybe_dropout(ff)?;
            h = self.tape.add(h, ff)?;
        }
        let h = self.layer_norm(h, "dec_norm")?;
        let embed = self.var("tgt_embed");
        let logits = self.tape.matmul_nt(h, embed)?;
        Ok(self.tape.cross_entropy_ls(logits, targets, smoothing)?)
    }
}
