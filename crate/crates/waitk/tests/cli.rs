//! End-to-end tests of the `waitk` binary: reproducibility, file-format
//! contracts between subcommands, and exit codes (0 ok, 1 usage, 2 data,
//! 3 numeric).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_waitk"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn waitk")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Tiny corpus + subword model + fast model flags shared by the tests.
fn prepare(dir: &Path) {
    ok(
        dir,
        &[
            "data", "synth", "--task", "copy", "--n", "60", "--min-len", "2", "--max-len", "5",
            "--vocab", "8", "--seed", "3", "--out", "corpus.tsv", "--holdout", "10",
            "--holdout-out", "test.tsv",
        ],
    );
    ok(
        dir,
        &["data", "learn-bpe", "--corpus", "corpus.tsv", "--merges", "40", "--out", "bpe.txt"],
    );
}

const TINY_MODEL: &[&str] = &[
    "--enc-layers", "1", "--dec-layers", "1", "--d-model", "16", "--d-ff", "32", "--heads", "2",
    "--dropout", "0.1",
];

fn train(dir: &Path, out: &str, extra: &[&str]) {
    let mut args = vec![
        "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", out, "--steps", "12",
        "--batch-tokens", "300", "--save-every", "6", "--seed", "5", "--log-every", "0",
    ];
    args.extend_from_slice(TINY_MODEL);
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn training_is_bit_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    train(tmp.path(), "runA", &[]);
    train(tmp.path(), "runB", &[]);
    let a = std::fs::read(tmp.path().join("runA/checkpoint_000012.wkck")).unwrap();
    let b = std::fs::read(tmp.path().join("runB/checkpoint_000012.wkck")).unwrap();
    assert_eq!(a, b, "same flags and seed must give identical checkpoints");

    let metrics = std::fs::read_to_string(tmp.path().join("runA/metrics.tsv")).unwrap();
    assert!(metrics.starts_with("step\tk\tloss\tlr\n"));
    assert_eq!(metrics.lines().count(), 13); // header + 12 steps
    assert!(tmp.path().join("runA/manifest.json").exists());
}

#[test]
fn synth_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a.tsv", "b.tsv"] {
        ok(
            tmp.path(),
            &[
                "data", "synth", "--task", "copy", "--n", "100", "--seed", "7", "--out", out,
            ],
        );
    }
    assert_eq!(
        std::fs::read(tmp.path().join("a.tsv")).unwrap(),
        std::fs::read(tmp.path().join("b.tsv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    let out = run(
        tmp.path(),
        &[
            "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "x", "--k-min", "5",
            "--k-max", "3",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = run(tmp.path(), &["train"]); // missing required flags
    assert_eq!(out.status.code(), Some(1));
    let out = run(tmp.path(), &["data", "synth", "--task", "nope", "--out", "x.tsv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    let out = run(
        tmp.path(),
        &["train", "--corpus", "missing.tsv", "--bpe", "bpe.txt", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["average", "corpus.tsv", "--out", "avg.wkck"]);
    assert_eq!(out.status.code(), Some(2), "not a checkpoint");
}

#[test]
fn numeric_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    let mut args = vec![
        "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "boom", "--steps", "30",
        "--batch-tokens", "300", "--base-lr", "1e300", "--warmup", "1", "--seed", "1",
        "--log-every", "0",
    ];
    args.extend_from_slice(TINY_MODEL);
    let out = run(tmp.path(), &args);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn average_of_one_is_identity_and_zero_is_usage() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    train(tmp.path(), "run", &[]);
    ok(
        tmp.path(),
        &["average", "run/checkpoint_000012.wkck", "--out", "avg.wkck"],
    );
    let orig = std::fs::read(tmp.path().join("run/checkpoint_000012.wkck")).unwrap();
    let avg = std::fs::read(tmp.path().join("avg.wkck")).unwrap();
    assert_eq!(orig, avg, "single-input average round-trips bytes");

    let out = run(tmp.path(), &["average", "--out", "avg2.wkck"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_evaluate_curve_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    train(dir, "run", &[]);
    ok(
        dir,
        &[
            "simulate", "--ensemble", "run/checkpoint_000012.wkck", "--bpe", "bpe.txt",
            "--test-set", "test.tsv", "--k", "1,3,inf", "--out", "sim",
        ],
    );

    // k = inf reads everything before writing: constant g = src_len.
    let traces = std::fs::read_to_string(dir.join("sim/k_inf/traces.jsonl")).unwrap();
    for line in traces.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let src_len = v["src_len"].as_u64().unwrap();
        for g in v["g"].as_array().unwrap() {
            assert_eq!(g.as_u64().unwrap(), src_len);
        }
    }

    // evaluate on simulate's outputs never errors (format contract).
    for k in ["1", "3", "inf"] {
        let hyp = format!("sim/k_{k}/hyp.txt");
        let refs = format!("sim/k_{k}/refs.txt");
        let tr = format!("sim/k_{k}/traces.jsonl");
        let out = format!("eval_{k}");
        ok(
            dir,
            &[
                "evaluate", "--hyp", &hyp, "--refs", &refs, "--traces", &tr, "--out", &out,
            ],
        );
    }

    // CSV reparse equals the JSON values exactly.
    let csv_text = std::fs::read_to_string(dir.join("eval_1.csv")).unwrap();
    assert!(csv_text.starts_with("model,k,mode,seg,bleu,al,ap,dal\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("eval_1.json")).unwrap()).unwrap();
    let data_line = csv_text.lines().nth(1).unwrap();
    let fields: Vec<&str> = data_line.split(',').collect();
    let p = &json["points"][0];
    assert_eq!(fields[0], p["model"].as_str().unwrap());
    assert_eq!(fields[1], p["k"].as_str().unwrap());
    for (i, key) in [(4, "bleu"), (5, "al"), (6, "ap"), (7, "dal")] {
        let reparsed: f64 = fields[i].parse().unwrap();
        assert_eq!(reparsed, p[key].as_f64().unwrap(), "{key} mismatch");
    }

    // replay determinism: re-evaluating saved traces reproduces the report.
    ok(
        dir,
        &[
            "evaluate", "--hyp", "sim/k_1/hyp.txt", "--refs", "sim/k_1/refs.txt", "--traces",
            "sim/k_1/traces.jsonl", "--out", "eval_1b",
        ],
    );
    assert_eq!(
        std::fs::read(dir.join("eval_1.csv")).unwrap(),
        std::fs::read(dir.join("eval_1b.csv")).unwrap()
    );

    // curve merges and sorts by AL; a missing input is reported but not fatal.
    let out = ok(
        dir,
        &[
            "curve", "eval_1.json", "eval_3.json", "eval_inf.json", "missing.json", "--out",
            "curve.csv",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    let curve = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
    let als: Vec<f64> = curve
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(als.len(), 3);
    assert!(als.windows(2).all(|w| w[0] <= w[1]), "sorted by AL: {als:?}");
}

#[test]
fn evaluate_identical_hyp_ref_scores_100_and_wait1_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let hyp = "a b c d e\nx y z w v\n";
    std::fs::write(dir.join("hyp.txt"), hyp).unwrap();
    std::fs::write(dir.join("refs.txt"), hyp).unwrap();
    // wait-1 traces with |x| = |y| = 5: AL = 1, AP = 0.6, DAL = 1
    let mut traces = String::new();
    for i in 0..2 {
        traces.push_str(&format!(
            "{{\"index\":{i},\"src_len\":5,\"tgt_len\":5,\"g\":[1,2,3,4,5]}}\n"
        ));
    }
    std::fs::write(dir.join("traces.jsonl"), traces).unwrap();
    ok(
        dir,
        &[
            "evaluate", "--hyp", "hyp.txt", "--refs", "refs.txt", "--traces", "traces.jsonl",
            "--out", "rep", "--model", "fixture", "--k", "1",
        ],
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rep.json")).unwrap()).unwrap();
    let p = &json["points"][0];
    assert_eq!(p["bleu"].as_f64().unwrap(), 100.0);
    assert!((p["al"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((p["ap"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!((p["dal"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    // misaligned inputs are a data error
    std::fs::write(dir.join("short.txt"), "a b\n").unwrap();
    let out = run(
        dir,
        &[
            "evaluate", "--hyp", "short.txt", "--refs", "refs.txt", "--traces", "traces.jsonl",
            "--out", "rep2",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tag_marks_every_source_and_double_tagging_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    ok(
        dir,
        &["data", "tag", "--in", "corpus.tsv", "--out", "tagged.tsv", "--tag", "<BT>"],
    );
    let text = std::fs::read_to_string(dir.join("tagged.tsv")).unwrap();
    for line in text.lines() {
        assert!(line.starts_with("<BT> "), "line untagged: {line}");
    }
    let out = run(
        dir,
        &["data", "tag", "--in", "tagged.tsv", "--out", "x.tsv", "--tag", "<BT>"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_counts_match_weights_within_3_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // two distinguishable corpora
    let big: String = (0..100).map(|i| format!("b{i}\tb{i}\tP\n")).collect();
    let small = "s0\ts0\tP\n".to_string();
    std::fs::write(dir.join("big.tsv"), big).unwrap();
    std::fs::write(dir.join("small.tsv"), small).unwrap();
    ok(
        dir,
        &[
            "data", "sample", "big.tsv", "small.tsv", "--temperature", "1", "--total", "800",
            "--seed", "2", "--out", "mix.tsv",
        ],
    );
    let text = std::fs::read_to_string(dir.join("mix.tsv")).unwrap();
    let total = text.lines().count();
    let from_big = text.lines().filter(|l| l.starts_with('b')).count();
    assert_eq!(total, 800);
    let p: f64 = 100.0 / 101.0;
    let mean = 800.0 * p;
    let sigma = (800.0 * p * (1.0 - p)).sqrt();
    assert!(
        (from_big as f64 - mean).abs() <= 3.0 * sigma + 1.0,
        "got {from_big} of 800 from the big corpus"
    );
}

#[test]
fn config_file_flags_lose_to_explicit_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    std::fs::write(dir.join("train.conf"), "steps=4\nbatch-tokens=200\n").unwrap();
    let mut args = vec![
        "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "cfg_run", "--config",
        "train.conf", "--steps", "6", "--seed", "5", "--log-every", "0",
    ];
    args.extend_from_slice(TINY_MODEL);
    ok(dir, &args);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("cfg_run/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["flags"]["steps"].as_u64(), Some(6), "flag wins");
    assert_eq!(
        manifest["flags"]["batch_tokens"].as_u64(),
        Some(200),
        "config supplies the rest"
    );
    assert!(dir.join("cfg_run/checkpoint_000006.wkck").exists());
}

#[test]
fn lookahead_flags_drive_the_beam() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    train(dir, "run", &[]);
    ok(
        dir,
        &[
            "simulate", "--ensemble", "run/checkpoint_000012.wkck", "--bpe", "bpe.txt",
            "--test-set", "test.tsv", "--k", "3", "--out", "sim_la", "--lookahead", "2",
            "--beam", "2",
        ],
    );
    let labels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sim_la/k_3/run.json")).unwrap())
            .unwrap();
    assert_eq!(labels["mode"].as_str(), Some("lookahead"));
    // --lookahead 1 violates M > 1
    let out = run(
        dir,
        &[
            "simulate", "--ensemble", "run/checkpoint_000012.wkck", "--bpe", "bpe.txt",
            "--test-set", "test.tsv", "--k", "3", "--out", "sim_bad", "--lookahead", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ensemble_of_identical_models_matches_single() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    train(dir, "run", &[]);
    let ck = "run/checkpoint_000012.wkck";
    ok(
        dir,
        &[
            "simulate", "--ensemble", ck, "--bpe", "bpe.txt", "--test-set", "test.tsv", "--k",
            "2", "--out", "solo",
        ],
    );
    let pair = format!("{ck},{ck}");
    ok(
        dir,
        &[
            "simulate", "--ensemble", &pair, "--bpe", "bpe.txt", "--test-set", "test.tsv",
            "--k", "2", "--out", "duo",
        ],
    );
    assert_eq!(
        std::fs::read(dir.join("solo/k_2/hyp.txt")).unwrap(),
        std::fs::read(dir.join("duo/k_2/hyp.txt")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.join("solo/k_2/traces.jsonl")).unwrap(),
        std::fs::read(dir.join("duo/k_2/traces.jsonl")).unwrap()
    );
    // the run labels carry comma-joined model ids
    let labels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("duo/k_2/run.json")).unwrap())
            .unwrap();
    assert_eq!(
        labels["model"].as_str(),
        Some("checkpoint_000012,checkpoint_000012")
    );
}

#[test]
fn distill_writes_kd_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    train(dir, "run", &[]);
    let sources = "t1 t2 .\n\nt3 .\n";
    std::fs::write(dir.join("mono.txt"), sources).unwrap();
    ok(
        dir,
        &[
            "data", "distill", "--teacher", "run/checkpoint_000012.wkck", "--bpe", "bpe.txt",
            "--sources", "mono.txt", "--out", "kd.tsv",
        ],
    );
    let text = std::fs::read_to_string(dir.join("kd.tsv")).unwrap();
    assert_eq!(text.lines().count(), 2, "empty line skipped");
    for line in text.lines() {
        assert!(line.ends_with("\tKD"));
    }
}

#[test]
fn checkpoint_files_carry_magic() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    train(tmp.path(), "run", &[]);
    let bytes = std::fs::read(tmp.path().join("run/checkpoint_000012.wkck")).unwrap();
    assert_eq!(&bytes[..4], b"WKCK");
}

#[test]
fn copy_task_training_halves_the_loss_in_200_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    let mut args = vec![
        "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", "long", "--steps",
        "200", "--batch-tokens", "400", "--save-every", "200", "--seed", "5", "--log-every",
        "0", "--k-min", "1", "--k-max", "5", "--base-lr", "0.1", "--warmup", "100",
    ];
    args.extend_from_slice(TINY_MODEL);
    ok(dir, &args);
    let metrics = std::fs::read_to_string(dir.join("long/metrics.tsv")).unwrap();
    let losses: Vec<f64> = metrics
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 200);
    assert!(
        losses[199] < 0.5 * losses[0],
        "loss {} -> {} is not a 50% drop",
        losses[0],
        losses[199]
    );
}

#[test]
fn six_checkpoint_average_matches_elementwise_recomputation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    // six differently-seeded checkpoints of the same shape
    let mut names = Vec::new();
    for seed in 0..6u64 {
        let out = format!("ck{seed}");
        let mut args = vec![
            "train", "--corpus", "corpus.tsv", "--bpe", "bpe.txt", "--out", &out, "--steps",
            "2", "--batch-tokens", "200", "--save-every", "2", "--log-every", "0",
        ];
        let seed_s = seed.to_string();
        args.extend_from_slice(&["--seed", &seed_s]);
        args.extend_from_slice(TINY_MODEL);
        ok(dir, &args);
        names.push(format!("ck{seed}/checkpoint_000002.wkck"));
    }
    let mut args: Vec<&str> = vec!["average"];
    args.extend(names.iter().map(|s| s.as_str()));
    args.extend_from_slice(&["--out", "mean.wkck"]);
    ok(dir, &args);

    let inputs: Vec<waitk::model::Parameters> = names
        .iter()
        .map(|n| waitk::cli::load_checkpoint(&dir.join(n)).unwrap())
        .collect();
    let mean = waitk::cli::load_checkpoint(&dir.join("mean.wkck")).unwrap();
    for (name, tensor) in mean.tensors() {
        for (i, &got) in tensor.data().iter().enumerate() {
            let expect = inputs
                .iter()
                .map(|p| p.tensors()[name].data()[i])
                .sum::<f64>()
                / 6.0;
            // the written value went through an f32 round trip
            assert!(
                (got - expect).abs() <= (expect.abs() * 1e-6).max(1e-7),
                "{name}[{i}]: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    train(dir, "run", &[]);
    for out in ["simA", "simB"] {
        ok(
            dir,
            &[
                "simulate", "--ensemble", "run/checkpoint_000012.wkck", "--bpe", "bpe.txt",
                "--test-set", "test.tsv", "--k", "2,inf", "--out", out,
            ],
        );
    }
    for k in ["k_2", "k_inf"] {
        for f in ["hyp.txt", "traces.jsonl", "refs.txt"] {
            assert_eq!(
                std::fs::read(dir.join("simA").join(k).join(f)).unwrap(),
                std::fs::read(dir.join("simB").join(k).join(f)).unwrap(),
                "{k}/{f} differs between identical runs"
            );
        }
    }
}

#[allow(dead_code)]
fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
