use crate::cli::{save_checkpoint, write_manifest, CliError};
use crate::data::{read_corpus, SubwordModel};
use crate::model::{
    init_params, multipath_loss_with, waitk_loss_with, LossOptions, ModelConfig, MultipathRange,
    Pair, WaitK,
};
use crate::numerics::AdamState;
use clap::Args;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Training corpus (source<TAB>target[<TAB>tag])
    #[arg(long)]
    pub corpus: PathBuf,
    /// Subword model file
    #[arg(long)]
    pub bpe: PathBuf,
    /// Output directory for checkpoints, metrics and the manifest
    #[arg(long)]
    pub out: PathBuf,
    /// Model preset: base-toy | deep-toy
    #[arg(long, default_value = "base-toy")]
    pub preset: String,
    #[arg(long)]
    pub enc_layers: Option<usize>,
    #[arg(long)]
    pub dec_layers: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub max_positions: Option<usize>,
    /// Token budget per batch (source and target tokens both count)
    #[arg(long, default_value_t = 2000)]
    pub batch_tokens: usize,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    /// Train at a fixed k ("inf" for full-sentence) instead of multi-path
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub k_min: usize,
    #[arg(long, default_value_t = 9)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0.08)]
    pub base_lr: f64,
    #[arg(long, default_value_t = 400)]
    pub warmup: u64,
    #[arg(long, default_value_t = 0.1)]
    pub label_smoothing: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Checkpoint every N steps (the final step always checkpoints)
    #[arg(long, default_value_t = 50)]
    pub save_every: usize,
    /// Print a progress line every N steps (0 = quiet)
    #[arg(long, default_value_t = 25)]
    pub log_every: usize,
}

#[derive(Debug)]
pub struct TrainSummary {
    pub first_loss: f64,
    pub final_loss: f64,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: PathBuf,
    pub config: ModelConfig,
}

enum Schedule {
    Multipath(MultipathRange),
    Fixed(WaitK),
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary, CliError> {
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".into()));
    }
    if args.batch_tokens == 0 {
        return Err(CliError::Usage("--batch-tokens must be >= 1".into()));
    }
    let schedule = match &args.k {
        Some(k) => Schedule::Fixed(
            k.parse::<WaitK>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        None => Schedule::Multipath(
            MultipathRange::new(args.k_min, args.k_max)
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
    };

    let subwords = SubwordModel::load(&args.bpe)?;
    let corpus = read_corpus(&args.corpus)?;
    if corpus.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no training pairs",
            args.corpus.display()
        )));
    }
    let mut skipped = 0usize;
    let pairs: Vec<Pair> = corpus
        .iter()
        .filter_map(|p| {
            let s = subwords.encode(&p.source);
            let t = subwords.encode(&p.target);
            if s.is_empty() || t.is_empty() {
                skipped += 1;
                None
            } else {
                Some((s, t))
            }
        })
        .collect();
    if pairs.is_empty() {
        return Err(CliError::Data("every pair tokenized to nothing".into()));
    }
    if skipped > 0 {
        eprintln!("train: skipped {skipped} pairs that tokenized to nothing");
    }

    let mut config = ModelConfig::preset(&args.preset, subwords.vocab_size())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    apply_overrides(&mut config, args);
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    std::fs::create_dir_all(&args.out)?;
    let mut params = init_params(&config, args.seed)?;
    let mut adam = AdamState::new(args.base_lr, args.warmup);
    let opts = LossOptions {
        label_smoothing: args.label_smoothing,
    };

    let batches = BatchPlan::new(&pairs, args.batch_tokens, args.seed);
    let mut metrics = String::from("step\tk\tloss\tlr\n");
    let mut first_loss = f64::NAN;
    let mut final_loss = f64::NAN;
    let mut checkpoints = Vec::new();
    let mut plan = batches;
    for step in 1..=args.steps {
        let batch = plan.next_batch();
        let step_seed = mix(args.seed, step as u64);
        let (loss, grads, k_label) = match &schedule {
            Schedule::Multipath(range) => {
                let (loss, grads) =
                    multipath_loss_with(&params, batch, *range, step_seed, &opts)?;
                // replicate the internal draw for logging
                let k = range.sample(&mut ChaCha8Rng::seed_from_u64(step_seed));
                (loss, grads, k.to_string())
            }
            Schedule::Fixed(k) => {
                let (loss, grads) = waitk_loss_with(&params, batch, *k, step_seed, &opts)?;
                (loss, grads, k.to_string())
            }
        };
        if !loss.is_finite() {
            return Err(CliError::Numeric(format!(
                "loss became non-finite at step {step}"
            )));
        }
        adam.apply(params.tensors_mut(), &grads)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let lr = adam.learning_rate(step as u64);
        metrics.push_str(&format!("{step}\t{k_label}\t{loss:.6}\t{lr:.6e}\n"));
        if step == 1 {
            first_loss = loss;
        }
        final_loss = loss;
        if args.log_every > 0 && (step % args.log_every == 0 || step == args.steps) {
            eprintln!("train: step {step}/{} k={k_label} loss {loss:.4}", args.steps);
        }
        if step % args.save_every == 0 || step == args.steps {
            let path = args.out.join(format!("checkpoint_{step:06}.wkck"));
            save_checkpoint(&path, &params)?;
            checkpoints.push(path);
        }
    }

    let mut f = std::fs::File::create(args.out.join("metrics.tsv"))?;
    f.write_all(metrics.as_bytes())?;
    write_manifest(&args.out, "train", args, args.seed)?;
    let final_checkpoint = checkpoints.last().expect("final step checkpoints").clone();
    Ok(TrainSummary {
        first_loss,
        final_loss,
        checkpoints,
        final_checkpoint,
        config,
    })
}

fn apply_overrides(config: &mut ModelConfig, args: &TrainArgs) {
    if let Some(v) = args.enc_layers {
        config.enc_layers = v;
    }
    if let Some(v) = args.dec_layers {
        config.dec_layers = v;
    }
    if let Some(v) = args.d_model {
        config.d_model = v;
    }
    if let Some(v) = args.d_ff {
        config.d_ff = v;
    }
    if let Some(v) = args.heads {
        config.heads = v;
    }
    if let Some(v) = args.dropout {
        config.dropout = v;
    }
    if let Some(v) = args.max_positions {
        config.max_positions = v;
    }
}

/// Deterministic epoch shuffling and greedy packing under a token budget.
struct BatchPlan<'a> {
    pairs: &'a [Pair],
    budget: usize,
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    cursor: usize,
    scratch: Vec<Pair>,
}

impl<'a> BatchPlan<'a> {
    fn new(pairs: &'a [Pair], budget: usize, seed: u64) -> Self {
        let mut plan = Self {
            pairs,
            budget,
            seed,
            epoch: 0,
            order: (0..pairs.len()).collect(),
            cursor: 0,
            scratch: Vec::new(),
        };
        plan.reshuffle();
        plan
    }

    fn reshuffle(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 0xE90C_0000 ^ self.epoch));
        self.order.shuffle(&mut rng);
        self.cursor = 0;
        self.epoch += 1;
    }

    fn next_batch(&mut self) -> &[Pair] {
        self.scratch.clear();
        let mut used = 0usize;
        loop {
            if self.cursor >= self.order.len() {
                self.reshuffle();
                if !self.scratch.is_empty() {
                    break; // keep batches within one epoch
                }
            }
            let (src, tgt) = &self.pairs[self.order[self.cursor]];
            let cost = src.len().max(tgt.len() + 1);
            if !self.scratch.is_empty() && used + cost > self.budget {
                break;
            }
            self.scratch.push((src.clone(), tgt.clone()));
            used += cost;
            self.cursor += 1;
            if used >= self.budget {
                break;
            }
        }
        &self.scratch
    }
}

/// splitmix64-style mixing of (seed, step) into one stream seed.
fn mix(seed: u64, step: u64) -> u64 {
    let mut z = seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
