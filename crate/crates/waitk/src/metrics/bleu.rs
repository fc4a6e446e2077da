use super::MetricsError;
use regex::Regex;
use std::collections::HashMap;
use std::sync::OnceLock;

const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Zero n-gram matches at any order give score 0.
    #[default]
    Off,
    /// Add one to numerator and denominator for orders 2..4.
    AddOne,
}

/// The standard international tokenization: punctuation next to non-digits
/// is split off, symbols are isolated, case is preserved.
pub fn tokenize_international(line: &str) -> Vec<String> {
    static RULES: OnceLock<[(Regex, &'static str); 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            (Regex::new(r"(\P{N})(\p{P})").unwrap(), "$1 $2 "),
            (Regex::new(r"(\p{P})(\P{N})").unwrap(), " $1 $2"),
            (Regex::new(r"(\p{S})").unwrap(), " $1 "),
        ]
    });
    let mut s = line.to_string();
    for (re, repl) in rules {
        s = re.replace_all(&s, *repl).into_owned();
    }
    s.split_whitespace().map(str::to_string).collect()
}

/// Corpus-level BLEU-4 in [0, 100]: clipped n-gram precisions, geometric
/// mean, brevity penalty exp(min(0, 1 - ref_len/hyp_len)).
pub fn corpus_bleu<S: AsRef<str>>(
    hyps: &[S],
    refs: &[S],
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            lhs: hyps.len(),
            rhs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricsError::EmptyInput("corpus_bleu"));
    }
    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for (h, r) in hyps.iter().zip(refs) {
        let ht = tokenize_international(h.as_ref());
        let rt = tokenize_international(r.as_ref());
        hyp_len += ht.len() as u64;
        ref_len += rt.len() as u64;
        for n in 1..=MAX_ORDER {
            let (m, t) = clipped_matches(&ht, &rt, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_precision_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let (mut m, mut t) = (matches[n - 1], totals[n - 1]);
        if smoothing == Smoothing::AddOne && n > 1 {
            m += 1;
            t += 1;
        }
        if m == 0 || t == 0 {
            return Ok(0.0);
        }
        log_precision_sum += (m as f64 / t as f64).ln();
    }
    let bp = if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    Ok(100.0 * bp * (log_precision_sum / MAX_ORDER as f64).exp())
}

fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> (u64, u64) {
    if hyp.len() < n {
        return (0, 0);
    }
    let total = (hyp.len() - n + 1) as u64;
    let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
    if reference.len() >= n {
        for w in reference.windows(n) {
            *ref_counts.entry(w).or_insert(0) += 1;
        }
    }
    let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
    for w in hyp.windows(n) {
        *hyp_counts.entry(w).or_insert(0) += 1;
    }
    let mut m = 0;
    for (gram, count) in hyp_counts {
        m += count.min(ref_counts.get(gram).copied().unwrap_or(0));
    }
    (m, total)
}
