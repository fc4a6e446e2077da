//! Desk-scale simultaneous machine translation with the wait-k policy.
//!
//! The crate trains small encoder-decoder transformers with unidirectional
//! (incremental) encoders, decodes them in a streaming READ/WRITE loop at a
//! chosen latency k, and scores the result with BLEU and the token-level
//! latency metrics AL, AP and DAL. A data layer provides subword
//! vocabularies, corpus filters, temperature sampling, provenance tagging
//! and synthetic tasks so the whole pipeline runs on one CPU core.
//!
//! Most capabilities have a runnable demo under `examples/`; the `waitk`
//! binary exposes the same pipeline as subcommands (`data`, `train`,
//! `average`, `simulate`, `evaluate`, `curve`).

pub mod cli;
pub mod data;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod stream;

/// Token identifier into a subword vocabulary.
pub type TokenId = usize;

// Reserved vocabulary slots. Every subword model places these ids first,
// so the model and data layers can share them as constants.
pub const PAD_ID: TokenId = 0;
pub const BOS_ID: TokenId = 1;
pub const EOS_ID: TokenId = 2;
pub const UNK_ID: TokenId = 3;
pub const BT_TAG_ID: TokenId = 4;
pub const ASR_TAG_ID: TokenId = 5;
