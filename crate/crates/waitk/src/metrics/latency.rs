//! Token-level latency metrics over delay traces. Delays are counted in
//! source tokens; the corpus value is the unweighted mean of per-sentence
//! values.

use super::MetricsError;
use crate::stream::DelayTrace;
use serde::Serialize;

fn validate(trace: &DelayTrace) -> Result<(), MetricsError> {
    if trace.src_len() == 0 || trace.tgt_len() == 0 {
        return Err(MetricsError::InvalidTrace(format!(
            "need src_len >= 1 and tgt_len >= 1, got {} and {}",
            trace.src_len(),
            trace.tgt_len()
        )));
    }
    Ok(())
}

/// AL: mean of g(t) - (t-1)/lambda over t = 1..tau, where lambda is
/// tgt_len/src_len and tau is the first step with the source fully read
/// (tgt_len if that never happens).
pub fn average_lagging(trace: &DelayTrace) -> Result<f64, MetricsError> {
    validate(trace)?;
    let src = trace.src_len();
    let lambda = trace.tgt_len() as f64 / src as f64;
    let g = trace.g();
    let tau = g
        .iter()
        .position(|&gt| gt == src)
        .map(|i| i + 1)
        .unwrap_or(trace.tgt_len());
    let mut sum = 0.0;
    for (i, &gt) in g.iter().take(tau).enumerate() {
        sum += gt as f64 - i as f64 / lambda;
    }
    Ok(sum / tau as f64)
}

/// AP: mean of g(t)/src_len over all target steps; always in (0, 1].
pub fn average_proportion(trace: &DelayTrace) -> Result<f64, MetricsError> {
    validate(trace)?;
    let sum: usize = trace.g().iter().sum();
    Ok(sum as f64 / (trace.src_len() as f64 * trace.tgt_len() as f64))
}

/// DAL: like AL but over all steps, with the delay monotonized by
/// g'(t) = max(g(t), g'(t-1) + 1/lambda).
pub fn differentiable_average_lagging(trace: &DelayTrace) -> Result<f64, MetricsError> {
    validate(trace)?;
    let lambda = trace.tgt_len() as f64 / trace.src_len() as f64;
    let step = 1.0 / lambda;
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for (i, &gt) in trace.g().iter().enumerate() {
        let gp = if i == 0 {
            gt as f64
        } else {
            (gt as f64).max(prev + step)
        };
        sum += gp - i as f64 * step;
        prev = gp;
    }
    Ok(sum / trace.tgt_len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SentenceLatency {
    pub al: f64,
    pub ap: f64,
    pub dal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatencyReport {
    pub al: f64,
    pub ap: f64,
    pub dal: f64,
    pub per_sentence: Vec<SentenceLatency>,
    pub n_sentences: usize,
}

/// Corpus latency: unweighted mean of per-sentence AL/AP/DAL.
pub fn latency_report(traces: &[DelayTrace]) -> Result<LatencyReport, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::EmptyInput("latency_report"));
    }
    let mut per_sentence = Vec::with_capacity(traces.len());
    for t in traces {
        per_sentence.push(SentenceLatency {
            al: average_lagging(t)?,
            ap: average_proportion(t)?,
            dal: differentiable_average_lagging(t)?,
        });
    }
    let n = per_sentence.len() as f64;
    Ok(LatencyReport {
        al: per_sentence.iter().map(|s| s.al).sum::<f64>() / n,
        ap: per_sentence.iter().map(|s| s.ap).sum::<f64>() / n,
        dal: per_sentence.iter().map(|s| s.dal).sum::<f64>() / n,
        n_sentences: per_sentence.len(),
        per_sentence,
    })
}
