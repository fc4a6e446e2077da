//! Drive the wait-k READ/WRITE loop by hand and print every action, then
//! compare traces across k values on a model trained for a moment on the
//! copy task.
//!
//!     cargo run --release --example streaming_decode

use waitk::data::{synth_task_generate, SubwordModel, SynthTask};
use waitk::model::{
    encode_incremental, init_params, multipath_loss, EncoderState, ModelConfig, MultipathRange,
    WaitK,
};
use waitk::numerics::AdamState;
use waitk::stream::{
    ensemble_logprobs, greedy_stream_decode, policy_action, Action, MaxLenRule, StreamState,
};
use waitk::EOS_ID;

fn main() {
    // A small copy-task model, trained for a few hundred steps.
    let pairs = synth_task_generate(SynthTask::Copy, 64, (3, 8), 10, 1).unwrap();
    let lines: Vec<&str> = pairs.iter().map(|p| p.source.as_str()).collect();
    let subwords = SubwordModel::learn(&lines, 40).unwrap();
    let cfg = ModelConfig {
        enc_layers: 1,
        dec_layers: 1,
        d_model: 32,
        d_ff: 64,
        heads: 4,
        vocab_size: subwords.vocab_size(),
        dropout: 0.0,
        max_positions: 64,
    };
    let mut params = init_params(&cfg, 3).unwrap();
    let batch: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|p| (subwords.encode(&p.source), subwords.encode(&p.target)))
        .collect();
    let range = MultipathRange::new(1, 4).unwrap();
    let mut adam = AdamState::new(0.1, 100);
    for step in 0..250u64 {
        let (_, grads) = multipath_loss(&params, &batch, range, step).unwrap();
        adam.apply(params.tensors_mut(), &grads).unwrap();
    }

    let source = "t3 t1 t4 t1 t5 .";
    let src_ids = subwords.encode(source);
    println!("source: {source}  ({} subword tokens)\n", src_ids.len());

    // Manual READ/WRITE loop at k = 2.
    let k = WaitK::Bounded(2);
    let mut state = StreamState::new(vec![EncoderState::empty(&params)]);
    let mut cursor = 0;
    println!("wait-2 stream:");
    while !state.finished && state.tgt_emitted.len() < 20 {
        match policy_action(&state, k).unwrap() {
            Action::Read => {
                if cursor < src_ids.len() {
                    let tok = src_ids[cursor];
                    cursor += 1;
                    encode_incremental(&mut state.enc_states[0], &params, tok).unwrap();
                    state.src_read.push(tok);
                    println!("  READ   {:>6}", subwords.token(tok));
                } else {
                    state.src_exhausted = true;
                    println!("  READ   <end of source>");
                }
            }
            Action::Write => {
                let lp = ensemble_logprobs(std::slice::from_ref(&params), &state).unwrap();
                let tok = lp
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                if tok == EOS_ID {
                    state.finished = true;
                    println!("  WRITE  <eos>");
                } else {
                    state.tgt_emitted.push(tok);
                    state.delays.push(state.src_read.len());
                    println!(
                        "  WRITE  {:>6}   (g = {})",
                        subwords.token(tok),
                        state.src_read.len()
                    );
                }
            }
        }
    }
    println!("\nhypothesis: {}", subwords.decode(&state.tgt_emitted));

    // The delay trace flattens as k grows.
    println!("\ndelay traces:");
    for k in [1usize, 3, 5] {
        let (tokens, trace) = greedy_stream_decode(
            std::slice::from_ref(&params),
            &src_ids,
            WaitK::Bounded(k),
            MaxLenRule::default(),
        )
        .unwrap();
        println!(
            "  k={k}: g = {:?}  hyp = {:?}",
            trace.g(),
            subwords.decode(&tokens)
        );
    }
}
