//! Byte-pair subword model with a joint source/target vocabulary.
//!
//! Words are whitespace pre-tokenized; each word becomes its characters
//! followed by a word-boundary symbol. The boundary symbol never takes part
//! in merges, so detokenization is a pure concatenate-and-split and the
//! round trip is lossless over the training alphabet.

use super::DataError;
use crate::{TokenId, UNK_ID};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

pub const SPECIAL_TOKENS: [&str; 6] = ["<pad>", "<bos>", "<eos>", "<unk>", "<BT>", "<ASR>"];
/// Word-boundary symbol; always id 6, directly after the specials.
pub const EOW: &str = "</w>";
pub const EOW_ID: TokenId = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SubwordModel {
    merges: Vec<(String, String)>,
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, TokenId>,
}

impl SubwordModel {
    /// Greedy highest-frequency pair merging; ties break to the
    /// lexicographically smallest pair. Deterministic.
    pub fn learn<S: AsRef<str>>(corpus: &[S], n_merges: usize) -> Result<Self, DataError> {
        if corpus.is_empty() {
            return Err(DataError::InvalidArgument(
                "cannot learn subwords from an empty corpus".into(),
            ));
        }
        let mut word_freq: BTreeMap<String, u64> = BTreeMap::new();
        for line in corpus {
            for w in line.as_ref().split_whitespace() {
                *word_freq.entry(w.to_string()).or_insert(0) += 1;
            }
        }
        let mut alphabet: BTreeSet<char> = BTreeSet::new();
        for w in word_freq.keys() {
            alphabet.extend(w.chars());
        }
        let mut words: Vec<(Vec<String>, u64)> = word_freq
            .iter()
            .map(|(w, &f)| {
                let mut syms: Vec<String> = w.chars().map(String::from).collect();
                syms.push(EOW.to_string());
                (syms, f)
            })
            .collect();

        let mut merges = Vec::with_capacity(n_merges);
        for _ in 0..n_merges {
            let mut counts: HashMap<(&str, &str), u64> = HashMap::new();
            for (syms, f) in &words {
                for pair in syms.windows(2) {
                    if pair[0] != EOW && pair[1] != EOW {
                        *counts.entry((&pair[0], &pair[1])).or_insert(0) += f;
                    }
                }
            }
            let best = counts
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
            let Some(((left, right), _)) = best else {
                break; // every word fully merged
            };
            let rule = (left.to_string(), right.to_string());
            for (syms, _) in words.iter_mut() {
                merge_in_place(syms, &rule);
            }
            merges.push(rule);
        }

        let mut id_to_token: Vec<String> =
            SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        id_to_token.push(EOW.to_string());
        id_to_token.extend(alphabet.iter().map(|c| c.to_string()));
        for (a, b) in &merges {
            let product = format!("{a}{b}");
            if !id_to_token.contains(&product) {
                id_to_token.push(product);
            }
        }
        Ok(Self::from_parts(merges, id_to_token))
    }

    fn from_parts(merges: Vec<(String, String)>, id_to_token: Vec<String>) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            merges,
            id_to_token,
            token_to_id,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn merge_rules(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.id_to_token[id]
    }

    pub fn id_for(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    /// Whitespace-split, segment each word into merged symbols, append the
    /// word boundary. Registered specials pass through as single ids;
    /// unknown characters become `<unk>`.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            if let Some(i) = SPECIAL_TOKENS.iter().position(|s| *s == word) {
                out.push(i);
                continue;
            }
            let mut syms: Vec<Option<String>> = word
                .chars()
                .map(|c| {
                    let s = c.to_string();
                    if self.token_to_id.contains_key(&s) {
                        Some(s)
                    } else {
                        None // unknown char, blocks merges across it
                    }
                })
                .collect();
            for rule in &self.merges {
                merge_optional(&mut syms, rule);
            }
            for s in syms {
                match s {
                    Some(sym) => out.push(self.token_to_id[&sym]),
                    None => out.push(UNK_ID),
                }
            }
            out.push(EOW_ID);
        }
        out
    }

    /// Concatenate symbols, turning word boundaries into spaces. PAD/BOS/EOS
    /// are skipped; tag specials render as standalone words.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut words: Vec<String> = Vec::new();
        let mut cur = String::new();
        for &id in ids {
            match id {
                0..=2 => {} // pad, bos, eos
                UNK_ID => cur.push_str("<unk>"),
                4 | 5 => {
                    if !cur.is_empty() {
                        words.push(std::mem::take(&mut cur));
                    }
                    words.push(self.id_to_token[id].clone());
                }
                EOW_ID => {
                    if !cur.is_empty() {
                        words.push(std::mem::take(&mut cur));
                    }
                }
                _ => {
                    if let Some(tok) = self.id_to_token.get(id) {
                        cur.push_str(tok);
                    }
                }
            }
        }
        if !cur.is_empty() {
            words.push(cur);
        }
        words.join(" ")
    }

    /// Line 1 `WKBPE v1`, one merge per line `left<SPACE>right`, a `#VOCAB`
    /// sentinel, then `token<TAB>id` lines.
    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut out = String::from("WKBPE v1\n");
        for (a, b) in &self.merges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out.push_str("#VOCAB\n");
        for (id, tok) in self.id_to_token.iter().enumerate() {
            out.push_str(&format!("{tok}\t{id}\n"));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some("WKBPE v1") => {}
            other => {
                return Err(DataError::BadModelFile(format!(
                    "bad header {other:?}, expected 'WKBPE v1'"
                )))
            }
        }
        let mut merges = Vec::new();
        let mut saw_sentinel = false;
        let mut vocab: Vec<(String, usize)> = Vec::new();
        for line in lines {
            if line == "#VOCAB" {
                saw_sentinel = true;
                continue;
            }
            if !saw_sentinel {
                let (a, b) = line.split_once(' ').ok_or_else(|| {
                    DataError::BadModelFile(format!("bad merge rule '{line}'"))
                })?;
                merges.push((a.to_string(), b.to_string()));
            } else if !line.is_empty() {
                let (tok, id) = line.split_once('\t').ok_or_else(|| {
                    DataError::BadModelFile(format!("bad vocab line '{line}'"))
                })?;
                let id: usize = id
                    .parse()
                    .map_err(|_| DataError::BadModelFile(format!("bad id in '{line}'")))?;
                vocab.push((tok.to_string(), id));
            }
        }
        if !saw_sentinel {
            return Err(DataError::BadModelFile("missing #VOCAB sentinel".into()));
        }
        let mut id_to_token = vec![String::new(); vocab.len()];
        for (tok, id) in vocab {
            if id >= id_to_token.len() || !id_to_token[id].is_empty() {
                return Err(DataError::BadModelFile(format!(
                    "ids are not dense from 0 (offending id {id})"
                )));
            }
            id_to_token[id] = tok;
        }
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            if id_to_token.get(i).map(String::as_str) != Some(*s) {
                return Err(DataError::BadModelFile(format!(
                    "special token {s} must sit at id {i}"
                )));
            }
        }
        if id_to_token.get(EOW_ID).map(String::as_str) != Some(EOW) {
            return Err(DataError::BadModelFile(format!(
                "word boundary {EOW} must sit at id {EOW_ID}"
            )));
        }
        Ok(Self::from_parts(merges, id_to_token))
    }
}

fn merge_in_place(syms: &mut Vec<String>, rule: &(String, String)) {
    let mut i = 0;
    while i + 1 < syms.len() {
        if syms[i] == rule.0 && syms[i + 1] == rule.1 {
            let right = syms.remove(i + 1);
            syms[i].push_str(&right);
        }
        i += 1;
    }
}

fn merge_optional(syms: &mut Vec<Option<String>>, rule: &(String, String)) {
    let mut i = 0;
    while i + 1 < syms.len() {
        let hit = matches!(
            (&syms[i], &syms[i + 1]),
            (Some(a), Some(b)) if *a == rule.0 && *b == rule.1
        );
        if hit {
            let right = syms.remove(i + 1).expect("checked");
            syms[i].as_mut().expect("checked").push_str(&right);
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_merge_on_repeated_pair() {
        let m = SubwordModel::learn(&["aa aa"], 1).unwrap();
        assert_eq!(m.merge_rules(), &[("a".to_string(), "a".to_string())]);
        let ids = m.encode("aa");
        assert_eq!(ids.len(), 2); // "aa" merged + boundary
        assert_eq!(m.decode(&ids), "aa");
    }

    #[test]
    fn zero_merges_is_character_level() {
        let m = SubwordModel::learn(&["ab ba"], 0).unwrap();
        assert!(m.merge_rules().is_empty());
        let ids = m.encode("ab");
        assert_eq!(ids.len(), 3); // a, b, boundary
    }

    #[test]
    fn learning_is_deterministic() {
        let corpus = ["the cat sat", "the bat sat", "a cat"];
        let a = SubwordModel::learn(&corpus, 10).unwrap();
        let b = SubwordModel::learn(&corpus, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_on_training_corpus() {
        let corpus = ["der große hund läuft", "die katze schläft tief", "der hund"];
        let m = SubwordModel::learn(&corpus, 30).unwrap();
        for line in corpus {
            assert_eq!(m.decode(&m.encode(line)), line);
        }
    }

    #[test]
    fn unknown_character_maps_to_unk() {
        let m = SubwordModel::learn(&["abc"], 0).unwrap();
        let ids = m.encode("axc");
        assert!(ids.contains(&UNK_ID));
        assert_eq!(m.decode(&m.encode("ø")), "<unk>");
    }

    #[test]
    fn empty_string_encodes_to_nothing() {
        let m = SubwordModel::learn(&["abc"], 0).unwrap();
        assert!(m.encode("").is_empty());
        assert!(m.encode("   ").is_empty());
    }

    #[test]
    fn specials_pass_through_as_single_ids() {
        let m = SubwordModel::learn(&["x y"], 0).unwrap();
        let ids = m.encode("<BT> x y");
        assert_eq!(ids[0], crate::BT_TAG_ID);
        assert_eq!(m.decode(&ids), "<BT> x y");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bpe");
        let m = SubwordModel::learn(&["hello world", "hell on earth"], 12).unwrap();
        m.save(&path).unwrap();
        let l = SubwordModel::load(&path).unwrap();
        assert_eq!(m, l);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("WKBPE v1\n"));
        assert!(text.contains("#VOCAB"));
        assert!(text.contains("<pad>\t0"));
    }

    #[test]
    fn load_rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bpe");
        std::fs::write(&path, "NOTBPE\n").unwrap();
        assert!(SubwordModel::load(&path).is_err());
        std::fs::write(&path, "WKBPE v1\na b\n").unwrap();
        assert!(SubwordModel::load(&path).is_err()); // no sentinel
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_over_training_alphabet(
            words in proptest::collection::vec("[abcd]{1,6}", 1..8),
            merges in 0usize..20,
        ) {
            let line = words.join(" ");
            let m = SubwordModel::learn(&[line.as_str()], merges).unwrap();
            prop_assert_eq!(m.decode(&m.encode(&line)), line);
        }
    }
}
