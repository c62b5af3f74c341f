//! Simulated-annotator benchmark: per-session interaction logs, NoC / NoF /
//! mDice aggregation, the trigger ablation and report emission.

mod augment;
mod dataset;
mod report;
mod synth;

pub use augment::{apply_plan, augment_sample, draw_plan, truncated_normal, AugmentParams, AugmentPlan};
pub use dataset::{load_dataset, load_image, load_mask, DatasetLoad, DatasetRecord, Sample};
pub use report::{
    ablation_table, emit_report, parse_report, report_to_csv, report_to_json, BenchmarkReport, CurvePoint,
    PhaseCounts, ReportConfig, ReportFormat, ThresholdStats, TimingStats, NOC_CLAMP_NOTE,
};
pub use synth::{synthetic_sample, synthetic_suite, SYNTH_SIDE};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clicks::Click;
use crate::pipeline::{Phase, PipelineError, Session, SessionConfig};
use crate::predictor::{Predictor, SharedPredictor};
use crate::raster::{overlap_counts, BinaryMask, RasterError, Rect};
use crate::simulate::next_corrective_click;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("missing directory {0}")]
    MissingDirectory(PathBuf),
    #[error("i/o: {0}")]
    Io(String),
    #[error("decode: {0}")]
    Decode(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("no interaction logs to aggregate")]
    EmptyLogs,
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Picks the next click from the current mask and the ground truth.
pub trait Clicker {
    fn next_click(
        &mut self,
        pred: &BinaryMask,
        gt: &BinaryMask,
        index: u32,
    ) -> Result<Option<Click>, RasterError>;
}

/// Deterministic oracle: interior of the largest error region.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrectiveClicker;

impl Clicker for CorrectiveClicker {
    fn next_click(
        &mut self,
        pred: &BinaryMask,
        gt: &BinaryMask,
        index: u32,
    ) -> Result<Option<Click>, RasterError> {
        next_corrective_click(pred, gt, index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub click: Click,
    pub iou: f64,
    pub dice: f64,
    pub phase: Phase,
    pub local_patch: Option<Rect>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionStatus {
    /// Stopped with IoU at or above `threshold`, the highest target reached.
    Reached { threshold: f64 },
    /// Ran out of clicks below every target.
    Exhausted,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionLog {
    pub record_id: String,
    pub max_clicks: usize,
    pub entries: Vec<LogEntry>,
    pub status: SessionStatus,
}

impl InteractionLog {
    /// 1-based index of the first entry with IoU ≥ `threshold`.
    pub fn first_reach(&self, threshold: f64) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.iou >= threshold)
            .map(|i| i + 1)
            .filter(|&k| k <= self.max_clicks)
    }

    /// Clicks charged at `threshold`: the first reach, else `max_clicks`.
    pub fn clicks_to(&self, threshold: f64) -> usize {
        self.first_reach(threshold).unwrap_or(self.max_clicks)
    }

    /// Dice after `k` clicks, holding the last value once the log ends.
    pub fn dice_at(&self, k: usize) -> f64 {
        match self.entries.len() {
            0 => 0.0,
            n => self.entries[k.clamp(1, n) - 1].dice,
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, SessionStatus::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub session: SessionConfig,
    /// IoU targets, e.g. 0.85 and 0.90.
    pub thresholds: Vec<f64>,
    /// Click budgets at which mDice is reported; empty means `1..=max_clicks`.
    pub curve_clicks: Vec<usize>,
    pub seed: u64,
    /// Include wall-clock timing in reports. Timing is the only
    /// nondeterministic part of a report.
    pub timing: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            session: SessionConfig::default(),
            thresholds: vec![0.85, 0.90],
            curve_clicks: Vec::new(),
            seed: 17,
            timing: false,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.session
            .validate()
            .map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(EvalError::InvalidConfig(format!("threshold {t} outside (0, 1]")));
        }
        if self.curve_clicks.contains(&0) {
            return Err(EvalError::InvalidConfig("curve click budgets start at 1".into()));
        }
        Ok(())
    }

    fn stop_threshold(&self) -> f64 {
        self.thresholds.iter().copied().fold(0.0, f64::max)
    }

    pub fn curve_points(&self) -> Vec<usize> {
        if self.curve_clicks.is_empty() {
            (1..=self.session.max_clicks).collect()
        } else {
            self.curve_clicks.clone()
        }
    }
}

/// Run one simulated annotation from an empty mask.
///
/// Each step asks `clicker` for a click, applies it and records IoU and Dice
/// against the ground truth. The session stops once the mask is exact, the
/// highest threshold is reached, or `max_clicks` clicks have been spent. A
/// predictor failure ends the log with `Failed`.
pub fn run_session(
    sample: &Sample,
    predictor: &SharedPredictor,
    cfg: &BenchmarkConfig,
    clicker: &mut dyn Clicker,
) -> Result<InteractionLog, EvalError> {
    let max_clicks = cfg.session.max_clicks;
    let stop_at = cfg.stop_threshold();
    let mut log = InteractionLog {
        record_id: sample.id.clone(),
        max_clicks,
        entries: Vec::new(),
        status: SessionStatus::Exhausted,
    };
    let mut session = Session::new(sample.image.clone(), predictor.clone(), cfg.session.clone())?;

    while log.entries.len() < max_clicks {
        let index = log.entries.len() as u32 + 1;
        let Some(click) = clicker.next_click(session.mask(), &sample.gt, index)? else {
            break;
        };
        let step = match session.add_click(click.y, click.x, click.polarity) {
            Ok(step) => step,
            Err(PipelineError::Predictor(e)) => {
                log.status = SessionStatus::Failed {
                    error: e.to_string(),
                };
                return Ok(log);
            }
            Err(e) => return Err(e.into()),
        };
        let counts = overlap_counts(&step.mask, &sample.gt)?;
        let iou = counts.iou();
        log.entries.push(LogEntry {
            click,
            iou,
            dice: counts.dice(),
            phase: step.phase,
            local_patch: step.local_patch,
            elapsed_ms: step.elapsed.as_secs_f64() * 1e3,
        });
        if iou >= stop_at {
            break;
        }
    }

    let best = log.entries.iter().map(|e| e.iou).fold(0.0, f64::max);
    log.status = cfg
        .thresholds
        .iter()
        .copied()
        .filter(|&t| best >= t)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
        .map_or(SessionStatus::Exhausted, |threshold| SessionStatus::Reached { threshold });
    Ok(log)
}

/// Mean clicks to reach `threshold`, failures charged `max_clicks`.
pub fn noc(logs: &[InteractionLog], threshold: f64) -> Result<f64, EvalError> {
    if logs.is_empty() {
        return Err(EvalError::EmptyLogs);
    }
    let total: usize = logs.iter().map(|l| l.clicks_to(threshold)).sum();
    Ok(total as f64 / logs.len() as f64)
}

/// Number of sessions that never reach `threshold`.
pub fn nof(logs: &[InteractionLog], threshold: f64) -> Result<usize, EvalError> {
    if logs.is_empty() {
        return Err(EvalError::EmptyLogs);
    }
    Ok(logs.iter().filter(|l| l.first_reach(threshold).is_none()).count())
}

/// Mean Dice after `k` clicks.
pub fn mdice_at(logs: &[InteractionLog], k: usize) -> Result<f64, EvalError> {
    if logs.is_empty() {
        return Err(EvalError::EmptyLogs);
    }
    if k == 0 {
        return Err(EvalError::InvalidConfig("mdice_at needs k >= 1".into()));
    }
    Ok(logs.iter().map(|l| l.dice_at(k)).sum::<f64>() / logs.len() as f64)
}

/// Aggregate logs into a report.
pub fn summarize(
    logs: &[InteractionLog],
    cfg: &BenchmarkConfig,
    predictor_name: &str,
) -> Result<BenchmarkReport, EvalError> {
    let thresholds = cfg
        .thresholds
        .iter()
        .map(|&t| {
            Ok(ThresholdStats {
                threshold: t,
                noc: noc(logs, t)?,
                nof: nof(logs, t)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let curve = cfg
        .curve_points()
        .into_iter()
        .map(|k| {
            Ok(CurvePoint {
                clicks: k,
                mdice: mdice_at(logs, k)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut phases = PhaseCounts::default();
    let mut elapsed = Vec::new();
    for entry in logs.iter().flat_map(|l| &l.entries) {
        match entry.phase {
            Phase::Coarse => phases.coarse += 1,
            Phase::Refined => phases.refined += 1,
        }
        elapsed.push(entry.elapsed_ms);
    }
    let timing = cfg.timing.then(|| {
        let total: f64 = elapsed.iter().sum();
        TimingStats {
            clicks: elapsed.len(),
            mean_spc_ms: if elapsed.is_empty() { 0.0 } else { total / elapsed.len() as f64 },
            total_ms: total,
        }
    });
    Ok(BenchmarkReport {
        config: ReportConfig {
            n_trigger: cfg.session.n_trigger,
            gamma_expand: cfg.session.gamma_expand,
            seed: cfg.seed,
            max_clicks: cfg.session.max_clicks,
            predictor: predictor_name.to_string(),
            noc_clamp: NOC_CLAMP_NOTE.to_string(),
        },
        samples: logs.len(),
        failed_sessions: logs.iter().filter(|l| l.failed()).count(),
        thresholds,
        curve,
        phases,
        timing,
    })
}

/// Benchmark every sample with the corrective clicker, in order.
pub fn benchmark(
    samples: &[Sample],
    predictor: &SharedPredictor,
    cfg: &BenchmarkConfig,
) -> Result<(BenchmarkReport, Vec<InteractionLog>), EvalError> {
    cfg.validate()?;
    let mut logs = Vec::with_capacity(samples.len());
    for sample in samples {
        let log = run_session(sample, predictor, cfg, &mut CorrectiveClicker)?;
        if let SessionStatus::Failed { error } = &log.status {
            log::warn!("session {} failed: {error}", sample.id);
        }
        logs.push(log);
    }
    let report = summarize(&logs, cfg, predictor.name())?;
    Ok((report, logs))
}

/// One benchmark per trigger value, each with the same config otherwise.
pub fn ablation_sweep(
    samples: &[Sample],
    predictor: &SharedPredictor,
    base: &BenchmarkConfig,
    n_values: &[usize],
) -> Result<Vec<BenchmarkReport>, EvalError> {
    n_values
        .iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.session.n_trigger = n;
            benchmark(samples, predictor, &cfg).map(|(r, _)| r)
        })
        .collect()
}
