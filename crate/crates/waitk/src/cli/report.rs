//! Evaluation reports. The CSV carries the header
//! `model,k,mode,seg,bleu,al,ap,dal`; the JSON mirrors the same rows as an
//! array of objects plus a `meta` object. Both serialize f64 through the
//! same shortest-round-trip formatter, so a CSV reparse equals the JSON
//! values exactly.

use super::CliError;
use crate::model::WaitK;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Greedy,
    Lookahead,
}

impl std::fmt::Display for SearchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchKind::Greedy => "greedy",
            SearchKind::Lookahead => "lookahead",
        })
    }
}

/// One latency-quality operating point. Ensemble rows carry comma-joined
/// model ids (the CSV writer quotes the field).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub model: String,
    pub k: WaitK,
    pub mode: SearchKind,
    pub seg: bool,
    pub bleu: f64,
    pub al: f64,
    pub ap: f64,
    pub dal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub points: Vec<CurvePoint>,
}

/// Eight lowercase hex digits of the CRC of `bytes`; used to fingerprint
/// resolved configurations in report metadata.
pub fn short_hash(bytes: &[u8]) -> String {
    format!("{:08x}", crc32fast::hash(bytes))
}

pub fn write_report_csv(path: &Path, points: &[CurvePoint]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(e.to_string()))?;
    for p in points {
        w.serialize(p).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<Vec<CurvePoint>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<CurvePoint>, _>>()
        .map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_report_json(path: &Path, report: &Report) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(e.to_string()))
}
