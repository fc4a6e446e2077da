use super::{CorpusPair, DataError};
use crate::metrics::wer;

/// Keep pairs whose token counts both lie in [min_len, max_len] and whose
/// length ratio max/min does not exceed `max_ratio`. Pure subset; order
/// preserved.
pub fn length_ratio_filter(
    pairs: &[CorpusPair],
    min_len: usize,
    max_len: usize,
    max_ratio: f64,
) -> Result<Vec<CorpusPair>, DataError> {
    if max_ratio < 1.0 {
        return Err(DataError::InvalidArgument(format!(
            "max_ratio must be >= 1, got {max_ratio}"
        )));
    }
    let min_len = min_len.max(1);
    Ok(pairs
        .iter()
        .filter(|p| {
            let s = p.source.split_whitespace().count();
            let t = p.target.split_whitespace().count();
            if s < min_len || t < min_len || s > max_len || t > max_len {
                return false;
            }
            s.max(t) as f64 / s.min(t) as f64 <= max_ratio
        })
        .cloned()
        .collect())
}

/// Drop pair i iff the word error rate of hypotheses[i] against the pair's
/// source exceeds the threshold (strict: a rate equal to the threshold is
/// kept).
pub fn wer_filter(
    pairs: &[CorpusPair],
    hypotheses: &[String],
    threshold: f64,
) -> Result<Vec<CorpusPair>, DataError> {
    if pairs.len() != hypotheses.len() {
        return Err(DataError::InvalidArgument(format!(
            "{} pairs but {} hypotheses",
            pairs.len(),
            hypotheses.len()
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DataError::InvalidArgument(format!(
            "threshold must be in [0, 1], got {threshold}"
        )));
    }
    let mut kept = Vec::new();
    for (pair, hyp) in pairs.iter().zip(hypotheses) {
        let src: Vec<&str> = pair.source.split_whitespace().collect();
        let hyp: Vec<&str> = hyp.split_whitespace().collect();
        if wer(&hyp, &src)? <= threshold {
            kept.push(pair.clone());
        }
    }
    Ok(kept)
}
