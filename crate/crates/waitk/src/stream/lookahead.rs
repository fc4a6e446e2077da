//! Look-ahead beam search: at a WRITE, explore M future tokens by beam
//! search under the current visibility, then commit only the first token of
//! the best-scoring path. No extra source tokens are consumed.

use super::decode::{EnsembleScorer, TokenScorer};
use super::policy::{policy_action, Action};
use super::{StreamError, StreamState};
use crate::model::{Parameters, WaitK};
use crate::{TokenId, EOS_ID};

#[derive(Clone, Copy, Debug)]
pub struct LookaheadConfig {
    m: usize,
    width: usize,
}

impl LookaheadConfig {
    pub fn new(m: usize, width: usize) -> Result<Self, StreamError> {
        if m < 2 {
            return Err(StreamError::InvalidLookahead(format!(
                "look-ahead depth must be >= 2, got {m}"
            )));
        }
        if width < 1 {
            return Err(StreamError::InvalidLookahead("width must be >= 1".into()));
        }
        Ok(Self { m, width })
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

#[derive(Clone, Debug)]
struct Path {
    tokens: Vec<TokenId>,
    score: f64,
    done: bool,
}

fn rank(paths: &mut [Path]) {
    // Highest score first; exact ties resolve to the lexicographically
    // smallest token sequence, i.e. the lowest token id first.
    paths.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tokens.cmp(&b.tokens)));
}

/// Beam-search `cfg.depth()` tokens ahead of `prefix` and return the first
/// token of the best path. A path that reaches `eos` stops early and is
/// scored over its emitted tokens only.
pub fn lookahead_choose<S: TokenScorer>(
    scorer: &S,
    prefix: &[TokenId],
    cfg: &LookaheadConfig,
    eos: TokenId,
) -> Result<TokenId, StreamError> {
    let mut beams = vec![Path {
        tokens: Vec::new(),
        score: 0.0,
        done: false,
    }];
    for _ in 0..cfg.m {
        if beams.iter().all(|p| p.done) {
            break;
        }
        let mut pool: Vec<Path> = Vec::new();
        for path in &beams {
            if path.done {
                pool.push(path.clone());
                continue;
            }
            let mut full = Vec::with_capacity(prefix.len() + path.tokens.len());
            full.extend_from_slice(prefix);
            full.extend_from_slice(&path.tokens);
            let lp = scorer.log_probs(&full)?;
            for (tok, &l) in lp.iter().enumerate() {
                let mut tokens = path.tokens.clone();
                tokens.push(tok);
                pool.push(Path {
                    tokens,
                    score: path.score + l,
                    done: tok == eos,
                });
            }
        }
        rank(&mut pool);
        pool.truncate(cfg.width);
        beams = pool;
    }
    rank(&mut beams);
    Ok(beams[0].tokens[0])
}

/// Streaming entry point: checks that the policy permits a WRITE, then runs
/// the beam over the model ensemble at the current visibility.
pub fn lookahead_step(
    models: &[Parameters],
    state: &StreamState,
    k: WaitK,
    cfg: &LookaheadConfig,
) -> Result<TokenId, StreamError> {
    if policy_action(state, k)? != Action::Write {
        return Err(StreamError::WriteNotPermitted);
    }
    let scorer = EnsembleScorer::new(models, &state.enc_states, state.src_read.len())?;
    lookahead_choose(&scorer, &state.tgt_emitted, cfg, EOS_ID)
}
