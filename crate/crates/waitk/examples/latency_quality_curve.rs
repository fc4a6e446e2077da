//! A miniature of the whole pipeline: train one multi-path model on the
//! dict-map task, stream-decode a held-out set at several k, and print the
//! latency-quality operating points. Low k trades quality for latency
//! because the task reorders some adjacent words.
//!
//!     cargo run --release --example latency_quality_curve

use waitk::data::{synth_task_generate, SubwordModel, SynthTask};
use waitk::metrics::{corpus_bleu, latency_report, Smoothing};
use waitk::model::{init_params, multipath_loss, ModelConfig, MultipathRange, WaitK};
use waitk::numerics::AdamState;
use waitk::stream::{simulate_corpus, SimOptions};

fn main() {
    let all = synth_task_generate(SynthTask::DictMap, 1500, (4, 12), 12, 21).unwrap();
    let (train, test) = all.split_at(1380);
    let lines: Vec<&str> = train
        .iter()
        .flat_map(|p| [p.source.as_str(), p.target.as_str()])
        .collect();
    let subwords = SubwordModel::learn(&lines, 60).unwrap();

    let cfg = ModelConfig {
        enc_layers: 1,
        dec_layers: 1,
        d_model: 48,
        d_ff: 128,
        heads: 4,
        vocab_size: subwords.vocab_size(),
        dropout: 0.0,
        max_positions: 96,
    };
    let mut params = init_params(&cfg, 5).unwrap();
    let encoded: Vec<(Vec<usize>, Vec<usize>)> = train
        .iter()
        .map(|p| (subwords.encode(&p.source), subwords.encode(&p.target)))
        .collect();
    let range = MultipathRange::new(3, 9).unwrap();
    let mut adam = AdamState::new(0.1, 150);

    println!("training multi-path (k in [3,9]) on {} pairs...", train.len());
    let chunk = 96;
    let mut start = 0;
    for step in 1..=330u64 {
        let end = (start + chunk).min(encoded.len());
        let batch = &encoded[start..end];
        start = if end == encoded.len() { 0 } else { end };
        let (loss, grads) = multipath_loss(&params, batch, range, step).unwrap();
        adam.apply(params.tensors_mut(), &grads).unwrap();
        if step % 110 == 0 {
            println!("  step {step}: loss {loss:.3}");
        }
    }

    let sources: Vec<&str> = test.iter().map(|p| p.source.as_str()).collect();
    let refs: Vec<&str> = test.iter().map(|p| p.target.as_str()).collect();
    println!("\n  k     BLEU      AL      AP     DAL");
    for k in [
        WaitK::Bounded(1),
        WaitK::Bounded(3),
        WaitK::Bounded(5),
        WaitK::Bounded(9),
        WaitK::Unbounded,
    ] {
        let records = simulate_corpus(
            std::slice::from_ref(&params),
            &subwords,
            &sources,
            k,
            &SimOptions::default(),
        );
        let hyps: Vec<&str> = records.iter().map(|r| r.hypothesis.as_str()).collect();
        let bleu = corpus_bleu(&hyps, &refs, Smoothing::Off).unwrap();
        let traces: Vec<_> = records
            .iter()
            .filter(|r| r.trace.tgt_len() > 0)
            .map(|r| r.trace.clone())
            .collect();
        let lat = latency_report(&traces).unwrap();
        println!(
            "  {k:<4} {bleu:>6.2} {al:>7.2} {ap:>7.3} {dal:>7.2}",
            al = lat.al,
            ap = lat.ap,
            dal = lat.dal
        );
    }
    println!("\nhigher k buys quality with latency; k=inf is the offline bound");
}
