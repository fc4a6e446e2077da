//! Streaming decode drivers and ensemble scoring.

use super::lookahead::{lookahead_choose, LookaheadConfig};
use super::policy::{policy_action, Action};
use super::{DelayTrace, StreamError, StreamState};
use crate::model::{decoder_step, encode_incremental, EncoderState, Parameters};
use crate::numerics::logsumexp;
use crate::{TokenId, EOS_ID};

/// Anything that can score the next token given the emitted target prefix.
/// The source visibility is fixed inside the scorer, so look-ahead search
/// cannot consume additional source tokens.
pub trait TokenScorer {
    fn vocab_size(&self) -> usize;
    fn log_probs(&self, prefix: &[TokenId]) -> Result<Vec<f64>, StreamError>;
}

/// Scores with the arithmetic mean of per-model log-probabilities,
/// renormalized. Encoder states must be synchronized to the same src_read.
pub struct EnsembleScorer<'a> {
    models: &'a [Parameters],
    enc_states: &'a [EncoderState],
    visible: usize,
}

impl<'a> EnsembleScorer<'a> {
    pub fn new(
        models: &'a [Parameters],
        enc_states: &'a [EncoderState],
        visible: usize,
    ) -> Result<Self, StreamError> {
        if models.is_empty() {
            return Err(StreamError::NoModels);
        }
        if models.len() != enc_states.len() {
            return Err(StreamError::VocabMismatch);
        }
        let vocab = models[0].config().vocab_size;
        if models.iter().any(|m| m.config().vocab_size != vocab) {
            return Err(StreamError::VocabMismatch);
        }
        Ok(Self {
            models,
            enc_states,
            visible,
        })
    }
}

impl TokenScorer for EnsembleScorer<'_> {
    fn vocab_size(&self) -> usize {
        self.models[0].config().vocab_size
    }

    fn log_probs(&self, prefix: &[TokenId]) -> Result<Vec<f64>, StreamError> {
        let mut rows = Vec::with_capacity(self.models.len());
        for (model, enc) in self.models.iter().zip(self.enc_states) {
            rows.push(decoder_step(model, enc, self.visible, prefix)?);
        }
        combine_mean_logprobs(&rows)
    }
}

/// Elementwise mean of log-probability rows, renormalized with logsumexp.
pub fn combine_mean_logprobs(rows: &[Vec<f64>]) -> Result<Vec<f64>, StreamError> {
    let first = rows.first().ok_or(StreamError::NoModels)?;
    let v = first.len();
    if rows.iter().any(|r| r.len() != v) {
        return Err(StreamError::VocabMismatch);
    }
    let mut mean = vec![0.0; v];
    for row in rows {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let n = rows.len() as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    let lse = logsumexp(&mean);
    for m in mean.iter_mut() {
        *m -= lse;
    }
    Ok(mean)
}

/// Ensemble distribution for the next token of an in-flight stream.
pub fn ensemble_logprobs(
    models: &[Parameters],
    state: &StreamState,
) -> Result<Vec<f64>, StreamError> {
    let scorer = EnsembleScorer::new(models, &state.enc_states, state.src_read.len())?;
    scorer.log_probs(&state.tgt_emitted)
}

/// Output length cap per segment: mult * |x| + add.
#[derive(Clone, Copy, Debug)]
pub struct MaxLenRule {
    pub mult: usize,
    pub add: usize,
}

impl Default for MaxLenRule {
    fn default() -> Self {
        Self { mult: 2, add: 10 }
    }
}

impl MaxLenRule {
    pub fn cap(&self, src_len: usize) -> usize {
        self.mult * src_len + self.add
    }
}

#[derive(Clone, Debug)]
pub enum SearchMode {
    Greedy,
    Lookahead(LookaheadConfig),
}

/// First index of the maximum value; ties resolve to the lowest token id.
pub(crate) fn argmax_lowest_tie(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Run the full READ/WRITE loop over one source sentence and return the
/// emitted tokens with their delay trace. Deterministic.
pub fn stream_decode(
    models: &[Parameters],
    src: &[TokenId],
    k: crate::model::WaitK,
    rule: MaxLenRule,
    mode: &SearchMode,
) -> Result<(Vec<TokenId>, DelayTrace), StreamError> {
    if src.is_empty() {
        return Err(StreamError::EmptySource);
    }
    if models.is_empty() {
        return Err(StreamError::NoModels);
    }
    let vocab = models[0].config().vocab_size;
    if models.iter().any(|m| m.config().vocab_size != vocab) {
        return Err(StreamError::VocabMismatch);
    }

    let enc_states: Vec<EncoderState> = models.iter().map(EncoderState::empty).collect();
    let mut state = StreamState::new(enc_states);
    let mut cursor = 0usize;
    let cap = rule.cap(src.len());

    while !state.finished {
        match policy_action(&state, k)? {
            Action::Read => {
                if cursor < src.len() {
                    let tok = src[cursor];
                    cursor += 1;
                    for (model, enc) in models.iter().zip(state.enc_states.iter_mut()) {
                        encode_incremental(enc, model, tok)?;
                    }
                    state.src_read.push(tok);
                } else {
                    state.src_exhausted = true;
                }
            }
            Action::Write => {
                if state.tgt_emitted.len() >= cap {
                    break;
                }
                let tok = match mode {
                    SearchMode::Greedy => {
                        let lp = ensemble_logprobs(models, &state)?;
                        argmax_lowest_tie(&lp)
                    }
                    SearchMode::Lookahead(cfg) => {
                        let scorer =
                            EnsembleScorer::new(models, &state.enc_states, state.src_read.len())?;
                        lookahead_choose(&scorer, &state.tgt_emitted, cfg, EOS_ID)?
                    }
                };
                if tok == EOS_ID {
                    state.finished = true;
                } else {
                    state.tgt_emitted.push(tok);
                    state.delays.push(state.src_read.len());
                }
            }
        }
    }
    let tokens = state.tgt_emitted.clone();
    let trace = state.into_trace(src.len())?;
    Ok((tokens, trace))
}

/// Greedy argmax streaming decode (the submission-time search).
pub fn greedy_stream_decode(
    models: &[Parameters],
    src: &[TokenId],
    k: crate::model::WaitK,
    rule: MaxLenRule,
) -> Result<(Vec<TokenId>, DelayTrace), StreamError> {
    stream_decode(models, src, k, rule, &SearchMode::Greedy)
}
