//! AL, AP and DAL on canonical delay traces: the full-sentence wait, the
//! wait-1 diagonal, and the family of wait-k schedules in between.
//!
//!     cargo run --example latency_metrics

use waitk::metrics::{
    average_lagging, average_proportion, differentiable_average_lagging, latency_report,
};
use waitk::stream::DelayTrace;

fn row(name: &str, trace: &DelayTrace) {
    println!(
        "  {name:<22} g = {:?}\n  {:<22} AL = {:.3}  AP = {:.3}  DAL = {:.3}",
        trace.g(),
        "",
        average_lagging(trace).unwrap(),
        average_proportion(trace).unwrap(),
        differentiable_average_lagging(trace).unwrap(),
    );
}

fn main() {
    println!("canonical traces (|x| = |y| = 6):");
    let full = DelayTrace::new(vec![6; 6], 6).unwrap();
    row("full-sentence wait", &full);
    let wait1 = DelayTrace::new((1..=6).collect(), 6).unwrap();
    row("wait-1 diagonal", &wait1);
    let wait3 = DelayTrace::wait_k(3, 6, 6).unwrap();
    row("wait-3 schedule", &wait3);

    println!("\nAL and AP against k (|x| = |y| = 12):");
    for k in [1usize, 2, 4, 6, 8, 12] {
        let t = DelayTrace::wait_k(k, 12, 12).unwrap();
        println!(
            "  k = {k:>2}: AL = {:>6.3}  AP = {:.3}  DAL = {:.3}",
            average_lagging(&t).unwrap(),
            average_proportion(&t).unwrap(),
            differentiable_average_lagging(&t).unwrap(),
        );
    }

    // Corpus values are unweighted means over sentences.
    let corpus = vec![
        DelayTrace::wait_k(3, 10, 9).unwrap(),
        DelayTrace::wait_k(3, 4, 5).unwrap(),
        DelayTrace::wait_k(3, 14, 15).unwrap(),
    ];
    let report = latency_report(&corpus).unwrap();
    println!(
        "\ncorpus of {} wait-3 sentences: AL = {:.3}, AP = {:.3}, DAL = {:.3}",
        report.n_sentences, report.al, report.ap, report.dal
    );
}
