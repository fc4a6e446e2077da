//! The unidirectional encoder extends one token at a time without touching
//! earlier positions. This example checks the incremental fold against a
//! full re-encode and measures what the cache saves.
//!
//!     cargo run --release --example incremental_encoder

use std::time::Instant;
use waitk::model::{encode_full, encode_incremental, init_params, EncoderState, ModelConfig};

fn main() {
    let cfg = ModelConfig::base_toy(64);
    let params = init_params(&cfg, 42).expect("valid config");
    let src: Vec<usize> = (0..40).map(|i| 6 + (i * 7) % 50).collect();

    // Fold tokens one by one, as a streaming reader would.
    let t0 = Instant::now();
    let mut inc = EncoderState::empty(&params);
    for &tok in &src {
        encode_incremental(&mut inc, &params, tok).unwrap();
    }
    let incremental_time = t0.elapsed();

    // The naive alternative: re-encode the whole prefix after every read.
    let t1 = Instant::now();
    let mut full = encode_full(&params, &src[..1]).unwrap();
    for n in 2..=src.len() {
        full = encode_full(&params, &src[..n]).unwrap();
    }
    let recompute_time = t1.elapsed();

    let max_diff = inc
        .outputs()
        .iter()
        .zip(full.outputs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    println!("source length:        {}", src.len());
    println!("incremental fold:     {incremental_time:?}");
    println!("recompute per read:   {recompute_time:?}");
    println!("max |difference|:     {max_diff:.3e}  (must be < 1e-9)");
    assert!(max_diff < 1e-9);

    // Causality: changing the last token leaves every earlier position
    // bit-identical.
    let mut changed = src.clone();
    *changed.last_mut().unwrap() = 6;
    let a = encode_full(&params, &src).unwrap();
    let b = encode_full(&params, &changed).unwrap();
    let prefix = (src.len() - 1) * cfg.d_model;
    assert_eq!(&a.outputs()[..prefix], &b.outputs()[..prefix]);
    println!("prefix is bit-identical after editing the last token");
}
