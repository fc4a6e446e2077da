//! Corpus handling: subword model, filtering, temperature sampling across
//! sources, provenance tagging, synthetic tasks and KD dataset assembly.
//!
//! Corpus files are UTF-8, one pair per line: `source<TAB>target<TAB>tag`
//! with tag in {P, BT, KD}; the tag column is optional and defaults to P.

mod bpe;
mod distill;
mod filter;
mod sample;
mod synth;
mod tag;

pub use bpe::{SubwordModel, EOW, EOW_ID, SPECIAL_TOKENS};
pub use distill::{distill_corpus, DistillOutcome};
pub use filter::{length_ratio_filter, wer_filter};
pub use sample::{temperature_sample, SamplingSpec, SourceSpec};
pub use synth::{synth_task_generate, SynthTask};
pub use tag::inject_tag;

use crate::metrics::MetricsError;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("line {line}: source already carries a tag token")]
    AlreadyTagged { line: usize },
    #[error("'{0}' is not a registered tag token")]
    UnregisteredTag(String),
    #[error("bad subword model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Provenance of a training pair: genuine parallel data, back-translated,
/// or teacher-generated (knowledge distillation / forward translation).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    P,
    Bt,
    Kd,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::P => "P",
            Tag::Bt => "BT",
            Tag::Kd => "KD",
        })
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" => Ok(Tag::P),
            "BT" => Ok(Tag::Bt),
            "KD" => Ok(Tag::Kd),
            other => Err(format!("unknown tag '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusPair {
    pub source: String,
    pub target: String,
    pub tag: Tag,
}

impl CorpusPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            tag: Tag::P,
        }
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tag = tag;
        self
    }
}

pub fn parse_corpus_line(line: &str, line_no: usize) -> Result<CorpusPair, DataError> {
    let mut fields = line.split('\t');
    let source = fields.next().unwrap_or_default();
    let target = fields.next().ok_or_else(|| DataError::Parse {
        line: line_no,
        msg: "expected source<TAB>target".into(),
    })?;
    let tag = match fields.next() {
        None | Some("") => Tag::P,
        Some(t) => t.parse().map_err(|msg| DataError::Parse { line: line_no, msg })?,
    };
    Ok(CorpusPair {
        source: source.to_string(),
        target: target.to_string(),
        tag,
    })
}

pub fn format_corpus_line(pair: &CorpusPair) -> String {
    format!("{}\t{}\t{}", pair.source, pair.target, pair.tag)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusPair>, DataError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_corpus_line(l, i + 1))
        .collect()
}

pub fn write_corpus(path: &Path, pairs: &[CorpusPair]) -> Result<(), DataError> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&format_corpus_line(p));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
