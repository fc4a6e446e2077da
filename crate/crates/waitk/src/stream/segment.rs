use crate::data::{SubwordModel, EOW_ID};
use crate::TokenId;
use std::collections::HashSet;

/// Sentence-final punctuation covering the EN and JA sides.
pub fn default_punctuation() -> HashSet<String> {
    [".", "!", "?", "。", "！", "？"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Split a source token stream into sub-sentence streams, cutting after
/// every completed word that is exactly a punctuation mark. Subword tokens
/// do not align with words, so the cut happens at the word boundary that
/// closes the punctuation; trailing material flushes as a final segment.
pub fn segment_stream(
    model: &SubwordModel,
    stream: &[TokenId],
    punctuation: &HashSet<String>,
) -> Vec<Vec<TokenId>> {
    let mut segments = Vec::new();
    let mut current: Vec<TokenId> = Vec::new();
    let mut word = String::new();
    for &id in stream {
        current.push(id);
        if id == EOW_ID {
            let completed = std::mem::take(&mut word);
            if punctuation.contains(&completed) {
                segments.push(std::mem::take(&mut current));
            }
        } else if id < EOW_ID {
            // specials are standalone words, never punctuation
            word.clear();
        } else {
            word.push_str(model.token(id));
        }
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}
