use crate::cli::commands::simulate::{RunLabels, TraceLine};
use crate::cli::report::{write_report_csv, write_report_json};
use crate::cli::{short_hash, CliError, CurvePoint, Report, ReportMeta, SearchKind};
use crate::metrics::{corpus_bleu, latency_report, Smoothing};
use crate::model::WaitK;
use crate::stream::DelayTrace;
use clap::Args;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// Hypotheses, one detokenized sentence per line
    #[arg(long)]
    pub hyp: PathBuf,
    /// References, aligned line by line
    #[arg(long)]
    pub refs: PathBuf,
    /// Delay traces (traces.jsonl from simulate)
    #[arg(long)]
    pub traces: PathBuf,
    /// Output base path; writes <out>.csv and <out>.json
    #[arg(long)]
    pub out: PathBuf,
    /// Row labels; default from run.json next to the traces file
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seg: bool,
    /// Add-one smoothing for BLEU orders 2..4
    #[arg(long)]
    pub smooth: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Report, CliError> {
    let hyps = read_lines(&args.hyp)?;
    let refs = read_lines(&args.refs)?;
    let trace_lines = read_traces(&args.traces)?;
    if hyps.len() != refs.len() || hyps.len() != trace_lines.len() {
        return Err(CliError::Data(format!(
            "misaligned line counts: {} hypotheses, {} references, {} traces",
            hyps.len(),
            refs.len(),
            trace_lines.len()
        )));
    }
    if hyps.is_empty() {
        return Err(CliError::Data("nothing to evaluate".into()));
    }

    let smoothing = if args.smooth {
        Smoothing::AddOne
    } else {
        Smoothing::Off
    };
    let bleu = corpus_bleu(&hyps, &refs, smoothing)?;

    let mut traces: Vec<DelayTrace> = Vec::new();
    for line in &trace_lines {
        if line.error.is_none() && line.tgt_len >= 1 && line.src_len >= 1 {
            traces.push(
                DelayTrace::new(line.g.clone(), line.src_len)
                    .map_err(|e| CliError::Data(e.to_string()))?,
            );
        }
    }
    if traces.is_empty() {
        return Err(CliError::Data(
            "no usable traces (all sentences empty or errored)".into(),
        ));
    }
    let latency = latency_report(&traces)?;

    let labels = load_labels(args)?;
    let point = CurvePoint {
        model: labels.model,
        k: labels.k,
        mode: labels.mode,
        seg: labels.seg,
        bleu,
        al: latency.al,
        ap: latency.ap,
        dal: latency.dal,
    };
    let flags_json = serde_json::to_vec(args).map_err(|e| CliError::Data(e.to_string()))?;
    let report = Report {
        meta: ReportMeta {
            seed: args.seed,
            config_hash: short_hash(&flags_json),
        },
        points: vec![point],
    };
    write_report_csv(&args.out.with_extension("csv"), &report.points)?;
    write_report_json(&args.out.with_extension("json"), &report)?;
    Ok(report)
}

fn load_labels(args: &EvaluateArgs) -> Result<RunLabels, CliError> {
    let sibling = args.traces.parent().map(|d| d.join("run.json"));
    let from_file: Option<RunLabels> = match sibling {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(&p)?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Data(e.to_string()))?)
        }
        _ => None,
    };
    let model = args
        .model
        .clone()
        .or_else(|| from_file.as_ref().map(|l| l.model.clone()))
        .unwrap_or_else(|| "unknown".into());
    let k = match &args.k {
        Some(s) => s.parse().map_err(|_| CliError::Usage(format!("bad --k {s}")))?,
        None => from_file.as_ref().map(|l| l.k).unwrap_or(WaitK::Unbounded),
    };
    let mode = match args.mode.as_deref() {
        Some("greedy") => SearchKind::Greedy,
        Some("lookahead") => SearchKind::Lookahead,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "bad --mode {other} (greedy | lookahead)"
            )))
        }
        None => from_file
            .as_ref()
            .map(|l| l.mode)
            .unwrap_or(SearchKind::Greedy),
    };
    let seg = args.seg || from_file.as_ref().map(|l| l.seg).unwrap_or(false);
    Ok(RunLabels { model, k, mode, seg })
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn read_traces(path: &Path) -> Result<Vec<TraceLine>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| CliError::Data(e.to_string())))
        .collect()
}
