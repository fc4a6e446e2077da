use crate::cli::{load_checkpoint, write_manifest, CliError, SearchKind};
use crate::data::{read_corpus, SubwordModel};
use crate::model::{Parameters, WaitK};
use crate::stream::{
    simulate_corpus, LookaheadConfig, MaxLenRule, SearchMode, SentenceRecord, SimOptions,
};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    /// Comma-separated checkpoint paths (two or more form an ensemble)
    #[arg(long, value_delimiter = ',', required = true)]
    pub ensemble: Vec<PathBuf>,
    #[arg(long)]
    pub bpe: PathBuf,
    /// Test corpus; sources are decoded, targets are copied out as refs
    #[arg(long)]
    pub test_set: PathBuf,
    /// Comma-separated k values, e.g. 1,3,5,7,9,inf
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9,inf")]
    pub k: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Look-ahead beam depth M (enables look-ahead search)
    #[arg(long)]
    pub lookahead: Option<usize>,
    /// Beam width for look-ahead search
    #[arg(long, default_value_t = 1)]
    pub beam: usize,
    /// Split sources at sentence-final punctuation and reset per segment
    #[arg(long)]
    pub segment: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub struct SimKRun {
    pub k: WaitK,
    pub dir: PathBuf,
}

/// One line of traces.jsonl, replayable by `evaluate`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TraceLine {
    pub index: usize,
    pub src_len: usize,
    pub tgt_len: usize,
    pub g: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&SentenceRecord> for TraceLine {
    fn from(r: &SentenceRecord) -> Self {
        Self {
            index: r.index,
            src_len: r.trace.src_len(),
            tgt_len: r.trace.tgt_len(),
            g: r.trace.g().to_vec(),
            error: r.error.clone(),
        }
    }
}

/// Labels for downstream evaluation, written next to each k's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunLabels {
    pub model: String,
    pub k: WaitK,
    pub mode: SearchKind,
    pub seg: bool,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<SimKRun>, CliError> {
    let ks: Vec<WaitK> = args
        .k
        .iter()
        .map(|s| s.parse::<WaitK>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if ks.is_empty() {
        return Err(CliError::Usage("no k values given".into()));
    }
    let mode = match args.lookahead {
        None => SearchMode::Greedy,
        Some(m) => SearchMode::Lookahead(
            LookaheadConfig::new(m, args.beam).map_err(|e| CliError::Usage(e.to_string()))?,
        ),
    };
    let kind = match mode {
        SearchMode::Greedy => SearchKind::Greedy,
        SearchMode::Lookahead(_) => SearchKind::Lookahead,
    };

    let models: Vec<Parameters> = args
        .ensemble
        .iter()
        .map(|p| load_checkpoint(p))
        .collect::<Result<_, _>>()?;
    let vocab = models[0].config().vocab_size;
    if models.iter().any(|m| m.config().vocab_size != vocab) {
        return Err(CliError::Data(
            "ensemble members have incompatible vocabularies".into(),
        ));
    }
    let subwords = SubwordModel::load(&args.bpe)?;
    if subwords.vocab_size() != vocab {
        return Err(CliError::Data(format!(
            "subword vocabulary ({}) does not match the models ({vocab})",
            subwords.vocab_size()
        )));
    }
    let test = read_corpus(&args.test_set)?;
    if test.is_empty() {
        return Err(CliError::Data("test set is empty".into()));
    }
    let sources: Vec<&str> = test.iter().map(|p| p.source.as_str()).collect();
    let model_id = args
        .ensemble
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect::<Vec<_>>()
        .join(",");

    std::fs::create_dir_all(&args.out)?;
    let opts = SimOptions {
        mode,
        segment: args.segment,
        max_len: MaxLenRule::default(),
        ..Default::default()
    };

    let mut runs = Vec::with_capacity(ks.len());
    for k in ks {
        let dir = args.out.join(format!("k_{k}"));
        std::fs::create_dir_all(&dir)?;
        let records = simulate_corpus(&models, &subwords, &sources, k, &opts);

        let mut hyp = String::new();
        let mut refs = String::new();
        let mut traces = String::new();
        for (record, pair) in records.iter().zip(&test) {
            hyp.push_str(&record.hypothesis);
            hyp.push('\n');
            refs.push_str(&pair.target);
            refs.push('\n');
            let line = TraceLine::from(record);
            traces.push_str(
                &serde_json::to_string(&line).map_err(|e| CliError::Data(e.to_string()))?,
            );
            traces.push('\n');
        }
        write(&dir.join("hyp.txt"), &hyp)?;
        write(&dir.join("refs.txt"), &refs)?;
        write(&dir.join("traces.jsonl"), &traces)?;
        let labels = RunLabels {
            model: model_id.clone(),
            k,
            mode: kind,
            seg: args.segment,
        };
        write(
            &dir.join("run.json"),
            &serde_json::to_string_pretty(&labels).map_err(|e| CliError::Data(e.to_string()))?,
        )?;
        let errors = records.iter().filter(|r| r.error.is_some()).count();
        if errors > 0 {
            eprintln!("simulate: k={k}: {errors} sentences recorded decode errors");
        }
        runs.push(SimKRun { k, dir });
    }
    write_manifest(&args.out, "simulate", args, args.seed)?;
    Ok(runs)
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
