//! Batch simulation: run the streaming decoder over a test set and collect
//! per-sentence hypotheses and delay traces for the metrics layer.

use super::decode::{stream_decode, MaxLenRule, SearchMode};
use super::segment::segment_stream;
use super::{DelayTrace, StreamError};
use crate::data::SubwordModel;
use crate::model::{Parameters, WaitK};
use crate::TokenId;
use std::collections::HashSet;

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub mode: SearchMode,
    pub segment: bool,
    pub max_len: MaxLenRule,
    pub punctuation: HashSet<String>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            mode: SearchMode::Greedy,
            segment: false,
            max_len: MaxLenRule::default(),
            punctuation: super::segment::default_punctuation(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SentenceRecord {
    pub index: usize,
    pub hyp_tokens: Vec<TokenId>,
    pub hypothesis: String,
    pub trace: DelayTrace,
    /// Per-sentence decode problems are recorded, not thrown.
    pub error: Option<String>,
}

/// One record per source sentence, in input order. With segmentation the
/// per-segment traces are concatenated under cumulative source offsets so
/// corpus metrics stay well defined over the whole line.
pub fn simulate_corpus<S: AsRef<str>>(
    models: &[Parameters],
    subwords: &SubwordModel,
    sources: &[S],
    k: WaitK,
    opts: &SimOptions,
) -> Vec<SentenceRecord> {
    sources
        .iter()
        .enumerate()
        .map(|(index, line)| simulate_sentence(models, subwords, index, line.as_ref(), k, opts))
        .collect()
}

fn simulate_sentence(
    models: &[Parameters],
    subwords: &SubwordModel,
    index: usize,
    line: &str,
    k: WaitK,
    opts: &SimOptions,
) -> SentenceRecord {
    let ids = subwords.encode(line);
    let empty = SentenceRecord {
        index,
        hyp_tokens: Vec::new(),
        hypothesis: String::new(),
        trace: DelayTrace::new(Vec::new(), ids.len()).expect("empty trace is valid"),
        error: None,
    };
    if ids.is_empty() {
        return SentenceRecord {
            error: Some("empty source after tokenization".into()),
            ..empty
        };
    }

    let result = if opts.segment {
        decode_segmented(models, subwords, &ids, k, opts)
    } else {
        stream_decode(models, &ids, k, opts.max_len, &opts.mode)
            .map(|(tokens, trace)| (subwords.decode(&tokens), tokens, trace))
            .map_err(|e| e.to_string())
    };
    match result {
        Ok((hypothesis, hyp_tokens, trace)) => SentenceRecord {
            index,
            hyp_tokens,
            hypothesis,
            trace,
            error: None,
        },
        Err(msg) => SentenceRecord {
            error: Some(msg),
            ..empty
        },
    }
}

type DecodeOk = (String, Vec<TokenId>, DelayTrace);

fn decode_segmented(
    models: &[Parameters],
    subwords: &SubwordModel,
    ids: &[TokenId],
    k: WaitK,
    opts: &SimOptions,
) -> Result<DecodeOk, String> {
    let segments = segment_stream(subwords, ids, &opts.punctuation);
    let mut texts: Vec<String> = Vec::new();
    let mut all_tokens: Vec<TokenId> = Vec::new();
    let mut delays: Vec<usize> = Vec::new();
    let mut src_offset = 0usize;
    for seg in &segments {
        let (tokens, trace) = stream_decode(models, seg, k, opts.max_len, &opts.mode)
            .map_err(|e: StreamError| e.to_string())?;
        for &g in trace.g() {
            delays.push(src_offset + g);
        }
        let text = subwords.decode(&tokens);
        if !text.is_empty() {
            texts.push(text);
        }
        all_tokens.extend(tokens);
        src_offset += seg.len();
    }
    let trace = DelayTrace::new(delays, ids.len()).map_err(|e| e.to_string())?;
    Ok((texts.join(" "), all_tokens, trace))
}
