//! The simultaneous READ/WRITE loop: wait-k policy, greedy and look-ahead
//! decoding over model ensembles, sentence segmentation and corpus
//! simulation producing delay traces.

mod decode;
mod lookahead;
mod policy;
mod segment;
mod simulate;

pub use decode::{
    combine_mean_logprobs, ensemble_logprobs, greedy_stream_decode, stream_decode, EnsembleScorer,
    MaxLenRule, SearchMode, TokenScorer,
};
pub use lookahead::{lookahead_choose, lookahead_step, LookaheadConfig};
pub use policy::{policy_action, Action};
pub use segment::{default_punctuation, segment_stream};
pub use simulate::{simulate_corpus, SentenceRecord, SimOptions};

use crate::model::{EncoderState, ModelError};
use crate::TokenId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid delay trace: {0}")]
    InvalidTrace(String),
    #[error("decode already finished")]
    Finished,
    #[error("policy does not permit WRITE")]
    WriteNotPermitted,
    #[error("empty source")]
    EmptySource,
    #[error("ensemble models must share a vocabulary")]
    VocabMismatch,
    #[error("no models given")]
    NoModels,
    #[error("invalid look-ahead config: {0}")]
    InvalidLookahead(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The delay function g: g(t) is the number of source tokens that had been
/// read when target token t was committed. Input to every latency metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDelayTrace", into = "RawDelayTrace")]
pub struct DelayTrace {
    src_len: usize,
    g: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawDelayTrace {
    src_len: usize,
    tgt_len: usize,
    g: Vec<usize>,
}

impl From<DelayTrace> for RawDelayTrace {
    fn from(t: DelayTrace) -> Self {
        Self {
            src_len: t.src_len,
            tgt_len: t.g.len(),
            g: t.g,
        }
    }
}

impl TryFrom<RawDelayTrace> for DelayTrace {
    type Error = StreamError;

    fn try_from(raw: RawDelayTrace) -> Result<Self, Self::Error> {
        if raw.tgt_len != raw.g.len() {
            return Err(StreamError::InvalidTrace(format!(
                "tgt_len {} does not match g length {}",
                raw.tgt_len,
                raw.g.len()
            )));
        }
        DelayTrace::new(raw.g, raw.src_len)
    }
}

impl DelayTrace {
    /// Validates 1 <= g(t) <= src_len and that g is non-decreasing.
    pub fn new(g: Vec<usize>, src_len: usize) -> Result<Self, StreamError> {
        let mut prev = 0usize;
        for (t, &gt) in g.iter().enumerate() {
            if gt == 0 || gt > src_len {
                return Err(StreamError::InvalidTrace(format!(
                    "g({}) = {gt} outside [1, {src_len}]",
                    t + 1
                )));
            }
            if gt < prev {
                return Err(StreamError::InvalidTrace(format!(
                    "g({}) = {gt} decreases below {prev}",
                    t + 1
                )));
            }
            prev = gt;
        }
        Ok(Self { src_len, g })
    }

    /// Canonical wait-k trace: g(t) = min(k + t - 1, src_len).
    pub fn wait_k(k: usize, src_len: usize, tgt_len: usize) -> Result<Self, StreamError> {
        if k == 0 || src_len == 0 {
            return Err(StreamError::InvalidTrace(
                "wait_k needs k >= 1 and src_len >= 1".into(),
            ));
        }
        let g = (1..=tgt_len).map(|t| (k + t - 1).min(src_len)).collect();
        Self::new(g, src_len)
    }

    pub fn g(&self) -> &[usize] {
        &self.g
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.g.len()
    }
}

/// One in-flight simultaneous decode.
#[derive(Debug)]
pub struct StreamState {
    pub src_read: Vec<TokenId>,
    pub src_exhausted: bool,
    pub tgt_emitted: Vec<TokenId>,
    pub delays: Vec<usize>,
    pub enc_states: Vec<EncoderState>,
    pub finished: bool,
}

impl StreamState {
    pub fn new(enc_states: Vec<EncoderState>) -> Self {
        Self {
            src_read: Vec::new(),
            src_exhausted: false,
            tgt_emitted: Vec::new(),
            delays: Vec::new(),
            enc_states,
            finished: false,
        }
    }

    /// The 1-based index of the next target step.
    pub fn next_target_step(&self) -> usize {
        self.tgt_emitted.len() + 1
    }

    pub fn into_trace(self, src_len: usize) -> Result<DelayTrace, StreamError> {
        DelayTrace::new(self.delays, src_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_invariants_enforced() {
        assert!(DelayTrace::new(vec![1, 2, 2, 3], 3).is_ok());
        assert!(DelayTrace::new(vec![0, 1], 3).is_err()); // below 1
        assert!(DelayTrace::new(vec![1, 4], 3).is_err()); // above src_len
        assert!(DelayTrace::new(vec![2, 1], 3).is_err()); // decreasing
        assert!(DelayTrace::new(vec![], 3).is_ok()); // empty hypothesis
    }

    #[test]
    fn wait_k_trace_matches_formula() {
        let t = DelayTrace::wait_k(3, 6, 6).unwrap();
        assert_eq!(t.g(), &[3, 4, 5, 6, 6, 6]);
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let t = DelayTrace::wait_k(2, 5, 4).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"tgt_len\":4"));
        let back: DelayTrace = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"src_len":3,"tgt_len":2,"g":[2,1]}"#;
        assert!(serde_json::from_str::<DelayTrace>(bad).is_err());
    }
}
