//! Quality and latency scoring: WER, corpus BLEU, AL, AP, DAL.

mod bleu;
mod latency;
mod wer;

pub use bleu::{corpus_bleu, tokenize_international, Smoothing};
pub use latency::{
    average_lagging, average_proportion, differentiable_average_lagging, latency_report,
    LatencyReport, SentenceLatency,
};
pub use wer::{edit_distance, wer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference is empty but hypothesis is not")]
    EmptyReference,
    #[error("aligned inputs differ in length: {lhs} vs {rhs}")]
    LengthMismatch { lhs: usize, rhs: usize },
    #[error("invalid trace for latency metrics: {0}")]
    InvalidTrace(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}
