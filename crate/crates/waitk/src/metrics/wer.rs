use super::MetricsError;

/// Levenshtein distance with unit costs for substitution, insertion and
/// deletions, via the classic two-row dynamic program.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Word error rate: edit distance divided by the reference length.
/// Both empty is 0; an empty reference with a non-empty hypothesis has no
/// usable denominator and is an error.
pub fn wer<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<f64, MetricsError> {
    if reference.is_empty() {
        return if hyp.is_empty() {
            Ok(0.0)
        } else {
            Err(MetricsError::EmptyReference)
        };
    }
    Ok(edit_distance(hyp, reference) as f64 / reference.len() as f64)
}
