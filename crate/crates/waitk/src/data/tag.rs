use super::{CorpusPair, DataError};

const REGISTERED_TAGS: [&str; 2] = ["<BT>", "<ASR>"];

/// Prepend a registered tag token to every source. Double application is an
/// error, not a no-op: a tagged source must never be tagged again.
pub fn inject_tag(pairs: &[CorpusPair], tag_token: &str) -> Result<Vec<CorpusPair>, DataError> {
    if !REGISTERED_TAGS.contains(&tag_token) {
        return Err(DataError::UnregisteredTag(tag_token.to_string()));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let first = pair.source.split_whitespace().next().unwrap_or("");
        if REGISTERED_TAGS.contains(&first) {
            return Err(DataError::AlreadyTagged { line: i + 1 });
        }
        let mut tagged = pair.clone();
        tagged.source = format!("{tag_token} {}", pair.source);
        out.push(tagged);
    }
    Ok(out)
}
