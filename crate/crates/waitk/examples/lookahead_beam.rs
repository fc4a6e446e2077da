//! Look-ahead beam search explores M tokens ahead under the current
//! visibility and commits only the first token of the best path. On this
//! hand-built distribution the greedy choice and the look-ahead choice
//! disagree.
//!
//!     cargo run --example lookahead_beam

use std::collections::HashMap;
use waitk::stream::{lookahead_choose, LookaheadConfig, StreamError, TokenScorer};
use waitk::TokenId;

/// Conditional next-token distributions keyed by the emitted suffix.
struct Table {
    rows: HashMap<Vec<TokenId>, Vec<f64>>,
}

impl TokenScorer for Table {
    fn vocab_size(&self) -> usize {
        3
    }

    fn log_probs(&self, prefix: &[TokenId]) -> Result<Vec<f64>, StreamError> {
        Ok(self.rows[prefix].clone())
    }
}

fn main() {
    const EOS: TokenId = 0;
    let names = ["<eos>", "A", "B"];
    let ln = |p: &[f64]| p.iter().map(|x| x.ln()).collect::<Vec<_>>();

    // P(first): A 0.6, B 0.4. After A the best continuation is 0.1;
    // after B, token B' follows with 0.9. So the best two-token path is
    // B -> B' with 0.36, beating every A path (at most 0.06).
    let mut rows = HashMap::new();
    rows.insert(vec![], ln(&[0.0001, 0.5999, 0.4]));
    rows.insert(vec![1], ln(&[0.1, 0.05, 0.05]));
    rows.insert(vec![2], ln(&[0.05, 0.05, 0.9]));
    let scorer = Table { rows };

    let first = scorer.log_probs(&[]).unwrap();
    let greedy = first
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    println!("greedy would emit:     {}", names[greedy]);

    let cfg = LookaheadConfig::new(2, 2).unwrap();
    let chosen = lookahead_choose(&scorer, &[], &cfg, EOS).unwrap();
    println!("look-ahead (M=2) emits: {}", names[chosen]);
    assert_ne!(greedy, chosen);

    // Width 1 cannot look past the greedy path and degenerates to it.
    let narrow = LookaheadConfig::new(2, 1).unwrap();
    let tok = lookahead_choose(&scorer, &[], &narrow, EOS).unwrap();
    println!("width-1 beam emits:    {} (same as greedy)", names[tok]);
    assert_eq!(tok, greedy);

    // Exhaustive enumeration of two-token paths for comparison.
    println!("\nall two-token paths:");
    for t1 in 0..3usize {
        let p1 = first[t1].exp();
        if t1 == EOS {
            println!("  [{}]            p = {p1:.4}", names[t1]);
            continue;
        }
        let second = scorer.log_probs(&[t1]).unwrap();
        for (t2, &l2) in second.iter().enumerate() {
            println!(
                "  [{} {}]{}  p = {:.4}",
                names[t1],
                names[t2],
                if t2 == EOS { " " } else { "  " },
                p1 * l2.exp()
            );
        }
    }
}
