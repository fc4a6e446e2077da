use crate::cli::{load_checkpoint, CliError};
use crate::data::{
    distill_corpus, inject_tag, length_ratio_filter, read_corpus, synth_task_generate,
    temperature_sample, wer_filter, write_corpus, CorpusPair, SamplingSpec, SourceSpec,
    SubwordModel, SynthTask,
};
use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Subcommand)]
pub enum DataCmd {
    /// Generate a synthetic parallel corpus
    Synth(SynthArgs),
    /// Learn a joint source/target subword vocabulary
    LearnBpe(LearnBpeArgs),
    /// Length/ratio filtering, optionally WER filtering against hypotheses
    Filter(FilterArgs),
    /// Temperature-sample a mixture of corpora
    Sample(SampleArgs),
    /// Prepend a tag token to every source
    Tag(TagArgs),
    /// Replace targets with a teacher's offline decodes (KD)
    Distill(DistillArgs),
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    /// copy | reverse | dict-map
    #[arg(long)]
    pub task: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub min_len: usize,
    #[arg(long, default_value_t = 16)]
    pub max_len: usize,
    #[arg(long, default_value_t = 24)]
    pub vocab: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Hold out the last N pairs into a separate file
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
    /// Where the held-out pairs go (default: <out>.holdout.tsv)
    #[arg(long)]
    pub holdout_out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct LearnBpeArgs {
    /// Corpus to learn on (both sides are used: joint vocabulary)
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub merges: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
    #[arg(long, default_value_t = 250)]
    pub max_len: usize,
    #[arg(long, default_value_t = 3.0)]
    pub max_ratio: f64,
    /// Recognition hypotheses aligned with the corpus; enables WER filtering
    #[arg(long)]
    pub wer_hyp: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    pub wer_threshold: f64,
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct SampleArgs {
    /// Input corpora, one per source
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub temperature: f64,
    #[arg(long)]
    pub total: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct TagArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Registered tag token, e.g. <BT> or <ASR>
    #[arg(long)]
    pub tag: String,
}

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct DistillArgs {
    #[arg(long)]
    pub teacher: PathBuf,
    #[arg(long)]
    pub bpe: PathBuf,
    /// Plain text, one source sentence per line
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_data(cmd: &DataCmd) -> Result<(), CliError> {
    match cmd {
        DataCmd::Synth(a) => synth(a),
        DataCmd::LearnBpe(a) => learn_bpe(a),
        DataCmd::Filter(a) => filter(a),
        DataCmd::Sample(a) => sample(a),
        DataCmd::Tag(a) => tag(a),
        DataCmd::Distill(a) => distill(a),
    }
}

fn manifest_beside<T: Serialize>(
    out: &Path,
    command: &str,
    flags: &T,
    seed: u64,
) -> Result<(), CliError> {
    let dir = match out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let manifest = serde_json::json!({
        "command": command,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix_ms": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        "flags": flags,
    });
    let name = format!(
        "{}.manifest.json",
        out.file_name().unwrap_or_default().to_string_lossy()
    );
    std::fs::write(
        dir.join(name),
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?,
    )?;
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let task: SynthTask = args
        .task
        .parse()
        .map_err(|e: crate::data::DataError| CliError::Usage(e.to_string()))?;
    if args.holdout >= args.n.saturating_add(1) {
        return Err(CliError::Usage(format!(
            "--holdout {} must be smaller than --n {}",
            args.holdout, args.n
        )));
    }
    let pairs = synth_task_generate(
        task,
        args.n,
        (args.min_len, args.max_len),
        args.vocab,
        args.seed,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let split = args.n - args.holdout;
    write_corpus(&args.out, &pairs[..split])?;
    if args.holdout > 0 {
        let holdout_path = args
            .holdout_out
            .clone()
            .unwrap_or_else(|| args.out.with_extension("holdout.tsv"));
        write_corpus(&holdout_path, &pairs[split..])?;
    }
    manifest_beside(&args.out, "data synth", args, args.seed)
}

fn learn_bpe(args: &LearnBpeArgs) -> Result<(), CliError> {
    let pairs = read_corpus(&args.corpus)?;
    if pairs.is_empty() {
        return Err(CliError::Data("corpus is empty".into()));
    }
    let mut lines: Vec<&str> = Vec::with_capacity(pairs.len() * 2);
    for p in &pairs {
        lines.push(&p.source);
        lines.push(&p.target);
    }
    let model = SubwordModel::learn(&lines, args.merges)?;
    model.save(&args.out)?;
    eprintln!(
        "learn-bpe: {} merges, vocabulary of {} tokens",
        model.merge_rules().len(),
        model.vocab_size()
    );
    manifest_beside(&args.out, "data learn-bpe", args, 0)
}

fn filter(args: &FilterArgs) -> Result<(), CliError> {
    let pairs = read_corpus(&args.input)?;
    let kept = length_ratio_filter(&pairs, args.min_len, args.max_len, args.max_ratio)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let kept = match &args.wer_hyp {
        None => kept,
        Some(hyp_path) => {
            let text = std::fs::read_to_string(hyp_path)?;
            let hyps: Vec<String> = text.lines().map(str::to_string).collect();
            wer_filter(&kept, &hyps, args.wer_threshold)?
        }
    };
    eprintln!("filter: kept {} of {} pairs", kept.len(), pairs.len());
    write_corpus(&args.out, &kept)?;
    manifest_beside(&args.out, "data filter", args, 0)
}

fn sample(args: &SampleArgs) -> Result<(), CliError> {
    let corpora: Vec<Vec<CorpusPair>> = args
        .inputs
        .iter()
        .map(|p| read_corpus(p))
        .collect::<Result<_, _>>()?;
    let sources: Vec<SourceSpec> = args
        .inputs
        .iter()
        .zip(&corpora)
        .map(|(p, c)| SourceSpec {
            name: p.display().to_string(),
            size: c.len(),
        })
        .collect();
    let spec = SamplingSpec::new(sources, args.temperature, args.total)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let counts = temperature_sample(&spec, &mut rng);
    let mut out: Vec<CorpusPair> = Vec::with_capacity(args.total);
    for (corpus, &count) in corpora.iter().zip(&counts) {
        for _ in 0..count {
            out.push(corpus[rng.gen_range(0..corpus.len())].clone());
        }
    }
    write_corpus(&args.out, &out)?;
    eprintln!("sample: drew {counts:?} from {} sources", counts.len());
    manifest_beside(&args.out, "data sample", args, args.seed)
}

fn tag(args: &TagArgs) -> Result<(), CliError> {
    let pairs = read_corpus(&args.input)?;
    let tagged = inject_tag(&pairs, &args.tag)?;
    write_corpus(&args.out, &tagged)?;
    manifest_beside(&args.out, "data tag", args, 0)
}

fn distill(args: &DistillArgs) -> Result<(), CliError> {
    let teacher = load_checkpoint(&args.teacher)?;
    let subwords = SubwordModel::load(&args.bpe)?;
    let text = std::fs::read_to_string(&args.sources)?;
    let sources: Vec<&str> = text.lines().collect();
    let outcome = distill_corpus(&teacher, &subwords, &sources);
    eprintln!(
        "distill: {} pairs, {} empty lines skipped, {} failures",
        outcome.pairs.len(),
        outcome.skipped_empty,
        outcome.failures.len()
    );
    for (line, msg) in outcome.failures.iter().take(5) {
        eprintln!("distill: line {line}: {msg}");
    }
    write_corpus(&args.out, &outcome.pairs)?;
    manifest_beside(&args.out, "data distill", args, 0)
}
