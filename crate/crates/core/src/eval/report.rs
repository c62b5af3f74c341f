use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Declared in every report: NoC beyond the click budget is not defined.
pub const NOC_CLAMP_NOTE: &str = "sessions that never reach a threshold count as max_clicks";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub n_trigger: usize,
    pub gamma_expand: f64,
    pub seed: u64,
    pub max_clicks: usize,
    pub predictor: String,
    pub noc_clamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub threshold: f64,
    pub noc: f64,
    pub nof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub clicks: usize,
    pub mdice: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub coarse: usize,
    pub refined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub clicks: usize,
    pub mean_spc_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: ReportConfig,
    pub samples: usize,
    pub failed_sessions: usize,
    pub thresholds: Vec<ThresholdStats>,
    pub curve: Vec<CurvePoint>,
    pub phases: PhaseCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingStats>,
}

impl BenchmarkReport {
    pub fn threshold(&self, t: f64) -> Option<&ThresholdStats> {
        self.thresholds.iter().find(|s| (s.threshold - t).abs() < 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

impl ReportFormat {
    /// Pick by file extension, defaulting to JSON.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

pub const CSV_HEADER: &str = "section,key,noc,nof,mdice";

/// Flat CSV: one header, one row per threshold, one row per curve point.
pub fn report_to_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for t in &report.thresholds {
        let _ = writeln!(out, "threshold,{},{},{},", t.threshold, t.noc, t.nof);
    }
    for p in &report.curve {
        let _ = writeln!(out, "curve,{},,,{}", p.clicks, p.mdice);
    }
    out
}

pub fn report_to_json(report: &BenchmarkReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn emit_report(report: &BenchmarkReport, path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    let body = match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
    };
    std::fs::write(path, body).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_report(json: &str) -> Result<BenchmarkReport, EvalError> {
    serde_json::from_str(json).map_err(|e| EvalError::Report(e.to_string()))
}

/// Plain-text comparison of reports keyed by trigger value.
pub fn ablation_table(reports: &[BenchmarkReport]) -> String {
    let mut out = String::from("n");
    let Some(first) = reports.first() else {
        out.push('\n');
        return out;
    };
    for t in &first.thresholds {
        let _ = write!(out, "\tNoC@{:.0}", t.threshold * 100.0);
    }
    for t in &first.thresholds {
        let _ = write!(out, "\tNoF@{:.0}", t.threshold * 100.0);
    }
    let last_k = first.curve.last().map(|p| p.clicks);
    if let Some(k) = last_k {
        let _ = write!(out, "\tmDice@{k}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{}", r.config.n_trigger);
        for t in &r.thresholds {
            let _ = write!(out, "\t{:.3}", t.noc);
        }
        for t in &r.thresholds {
            let _ = write!(out, "\t{}", t.nof);
        }
        if let Some(p) = r.curve.last() {
            let _ = write!(out, "\t{:.4}", p.mdice);
        }
        out.push('\n');
    }
    out
}
