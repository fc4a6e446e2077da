//! The corpus toolbox end to end: synthesize, filter, weight multi-source
//! sampling by temperature, tag back-translations, and distill a teacher
//! into KD training pairs.
//!
//!     cargo run --release --example data_pipeline

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use waitk::data::{
    distill_corpus, inject_tag, length_ratio_filter, synth_task_generate, temperature_sample,
    CorpusPair, SamplingSpec, SourceSpec, SubwordModel, SynthTask,
};
use waitk::model::{init_params, multipath_loss, ModelConfig, MultipathRange};
use waitk::numerics::AdamState;

fn main() {
    // Synthetic parallel data.
    let pairs = synth_task_generate(SynthTask::Copy, 80, (2, 9), 12, 5).unwrap();
    println!("synthesized {} copy pairs, e.g. {:?}", pairs.len(), pairs[0].source);

    // Length-ratio filtering drops degenerate pairs.
    let mut noisy = pairs.clone();
    noisy.push(CorpusPair::new("t1", "t1 t1 t1 t1 t1 t1 t1 t1 t1 t1 ."));
    noisy.push(CorpusPair::new("", "t2 ."));
    let kept = length_ratio_filter(&noisy, 1, 250, 3.0).unwrap();
    println!("filter kept {} of {} pairs", kept.len(), noisy.len());

    // Temperature sampling across imbalanced sources.
    let spec = SamplingSpec::new(
        vec![
            SourceSpec { name: "big".into(), size: 100 },
            SourceSpec { name: "small".into(), size: 1 },
        ],
        5.0,
        1000,
    )
    .unwrap();
    println!("\nsampling weights at T=5: {:?}", spec.weights());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let counts = temperature_sample(&spec, &mut rng);
    println!("realized counts over 1000 draws: {counts:?}");

    // Tagged back-translation: the tag token leads every source.
    let tagged = inject_tag(&pairs[..3], "<BT>").unwrap();
    println!("\ntagged source: {:?}", tagged[0].source);

    // Knowledge distillation: train a quick copy-task teacher, then let it
    // re-target the corpus.
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
    let mut teacher = init_params(&cfg, 2).unwrap();
    let batch: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|p| (subwords.encode(&p.source), subwords.encode(&p.target)))
        .collect();
    let mut adam = AdamState::new(0.1, 100);
    let range = MultipathRange::new(2, 6).unwrap();
    for step in 0..220u64 {
        let (_, grads) = multipath_loss(&teacher, &batch, range, step).unwrap();
        adam.apply(teacher.tensors_mut(), &grads).unwrap();
    }
    let outcome = distill_corpus(&teacher, &subwords, &lines[..5]);
    println!("\ndistilled {} pairs (tag KD):", outcome.pairs.len());
    for p in &outcome.pairs {
        println!("  {:<28} -> {}", p.source, p.target);
    }
}
