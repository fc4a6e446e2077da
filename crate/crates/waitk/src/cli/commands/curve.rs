use crate::cli::report::write_report_csv;
use crate::cli::{read_report_csv, read_report_json, CliError, CurvePoint};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct CurveArgs {
    /// Evaluation reports to merge (.json or .csv)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output CSV, rows sorted by AL
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct CurveSummary {
    pub points: Vec<CurvePoint>,
    pub missing: Vec<PathBuf>,
}

/// Merge CurvePoints across runs into one latency-quality table, sorted by
/// AL. Missing or unreadable inputs are listed on stderr; whatever loaded
/// is still written.
pub fn cmd_curve(args: &CurveArgs) -> Result<CurveSummary, CliError> {
    let mut points: Vec<CurvePoint> = Vec::new();
    let mut missing: Vec<PathBuf> = Vec::new();
    for input in &args.inputs {
        let loaded = if input.extension().is_some_and(|e| e == "json") {
            read_report_json(input).map(|r| r.points)
        } else {
            read_report_csv(input)
        };
        match loaded {
            Ok(mut p) => points.append(&mut p),
            Err(e) => {
                eprintln!("curve: skipping {}: {e}", input.display());
                missing.push(input.clone());
            }
        }
    }
    points.sort_by(|a, b| a.al.total_cmp(&b.al));
    write_report_csv(&args.out, &points)?;
    Ok(CurveSummary { points, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::{Report, ReportMeta, SearchKind};
    use crate::model::WaitK;

    fn point(k: usize, al: f64, bleu: f64) -> CurvePoint {
        CurvePoint {
            model: "m".into(),
            k: WaitK::Bounded(k),
            mode: SearchKind::Greedy,
            seg: false,
            bleu,
            al,
            ap: 0.5,
            dal: al + 0.5,
        }
    }

    #[test]
    fn merges_and_sorts_by_al() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.csv");
        crate::cli::report::write_report_json(
            &a,
            &Report {
                meta: ReportMeta {
                    seed: 0,
                    config_hash: "x".into(),
                },
                points: vec![point(5, 5.0, 30.0)],
            },
        )
        .unwrap();
        write_report_csv(&b, &[point(1, 1.0, 20.0), point(3, 3.0, 28.0)]).unwrap();
        let out = dir.path().join("curve.csv");
        let summary = cmd_curve(&CurveArgs {
            inputs: vec![a, b, dir.path().join("missing.json")],
            out: out.clone(),
        })
        .unwrap();
        assert_eq!(summary.missing.len(), 1);
        let merged = read_report_csv(&out).unwrap();
        let als: Vec<f64> = merged.iter().map(|p| p.al).collect();
        assert_eq!(als, vec![1.0, 3.0, 5.0]);
    }
}
