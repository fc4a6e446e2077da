//! Synthetic parallel tasks standing in for real corpora. Every sentence
//! ends with a "." delimiter token so segmentation has something to cut on.

use super::{CorpusPair, DataError, Tag};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthTask {
    /// target = source
    Copy,
    /// target = reversed source (needs the whole sentence; wait-k hurts a lot)
    Reverse,
    /// target = bijective word mapping with content-triggered local
    /// reordering: when a pair's first word belongs to a fixed 20% subset of
    /// the vocabulary, the two mapped words swap. Predicting the swap needs
    /// one token of look-ahead, which gives a genuine latency-quality
    /// trade-off.
    DictMap,
}

impl FromStr for SynthTask {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "copy" => Ok(SynthTask::Copy),
            "reverse" => Ok(SynthTask::Reverse),
            "dict-map" | "dictmap" => Ok(SynthTask::DictMap),
            other => Err(DataError::InvalidArgument(format!(
                "unknown task '{other}' (copy | reverse | dict-map)"
            ))),
        }
    }
}

const SWAP_FRACTION: f64 = 0.2;

/// Deterministic corpus of `n` pairs with body lengths in `len_range`
/// (the trailing "." is extra). All pairs are tagged P.
pub fn synth_task_generate(
    task: SynthTask,
    n: usize,
    len_range: (usize, usize),
    vocab_size: usize,
    seed: u64,
) -> Result<Vec<CorpusPair>, DataError> {
    if vocab_size < 4 {
        return Err(DataError::InvalidArgument(format!(
            "vocab_size must be >= 4, got {vocab_size}"
        )));
    }
    let (lo, hi) = len_range;
    if lo == 0 || lo > hi {
        return Err(DataError::InvalidArgument(format!(
            "need 1 <= min_len <= max_len, got [{lo}, {hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..vocab_size).map(|i| format!("t{i}")).collect();

    // Mapping and swap-trigger set are drawn first so they are fixed for the
    // whole corpus (train and held-out splits of one call stay consistent).
    let mut mapping: Vec<usize> = (0..vocab_size).collect();
    mapping.shuffle(&mut rng);
    let mut trigger_order: Vec<usize> = (0..vocab_size).collect();
    trigger_order.shuffle(&mut rng);
    let n_triggers = ((vocab_size as f64) * SWAP_FRACTION).round() as usize;
    let mut is_trigger = vec![false; vocab_size];
    for &w in trigger_order.iter().take(n_triggers) {
        is_trigger[w] = true;
    }

    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(lo..=hi);
        let body: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab_size)).collect();
        let tgt_body: Vec<usize> = match task {
            SynthTask::Copy => body.clone(),
            SynthTask::Reverse => body.iter().rev().copied().collect(),
            SynthTask::DictMap => {
                let mut mapped: Vec<usize> = body.iter().map(|&w| mapping[w]).collect();
                let mut i = 0;
                while i + 1 < mapped.len() {
                    if is_trigger[body[i]] {
                        mapped.swap(i, i + 1);
                    }
                    i += 2;
                }
                mapped
            }
        };
        let mut source: Vec<&str> = body.iter().map(|&w| words[w].as_str()).collect();
        source.push(".");
        let mut target: Vec<&str> = tgt_body.iter().map(|&w| words[w].as_str()).collect();
        target.push(".");
        pairs.push(CorpusPair::new(source.join(" "), target.join(" ")).with_tag(Tag::P));
    }
    Ok(pairs)
}
