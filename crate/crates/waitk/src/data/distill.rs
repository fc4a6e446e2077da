use super::{CorpusPair, SubwordModel, Tag};
use crate::model::{Parameters, WaitK};
use crate::stream::{greedy_stream_decode, MaxLenRule};

#[derive(Debug, Default)]
pub struct DistillOutcome {
    pub pairs: Vec<CorpusPair>,
    /// Empty source lines are skipped, not errors.
    pub skipped_empty: usize,
    /// (input line index, message); decode failures are recorded per line.
    pub failures: Vec<(usize, String)>,
}

/// Sequence-level knowledge distillation: the teacher's offline greedy
/// decode (k unbounded) becomes the target; pairs are tagged KD.
pub fn distill_corpus<S: AsRef<str>>(
    teacher: &Parameters,
    subwords: &SubwordModel,
    sources: &[S],
) -> DistillOutcome {
    let mut out = DistillOutcome::default();
    let teacher_slice = std::slice::from_ref(teacher);
    for (i, line) in sources.iter().enumerate() {
        let line = line.as_ref().trim();
        if line.is_empty() {
            out.skipped_empty += 1;
            continue;
        }
        let ids = subwords.encode(line);
        if ids.is_empty() {
            out.skipped_empty += 1;
            continue;
        }
        match greedy_stream_decode(teacher_slice, &ids, WaitK::Unbounded, MaxLenRule::default()) {
            Ok((tokens, _)) => {
                let target = subwords.decode(&tokens);
                out.pairs
                    .push(CorpusPair::new(line.to_string(), target).with_tag(Tag::Kd));
            }
            Err(e) => out.failures.push((i, e.to_string())),
        }
    }
    out
}
