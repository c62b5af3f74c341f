//! Normalized focal loss, binary cross-entropy and their weighted sum, with
//! the analytic focal-loss gradient. All losses are means over pixels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{BinaryMask, ProbMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NflParams {
    pub alpha: f64,
    pub gamma_focal: f64,
    pub epsilon: f64,
}

impl Default for NflParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma_focal: 2.0,
            epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CombinedParams {
    pub k1: f64,
    pub k2: f64,
    pub nfl: NflParams,
}

impl Default for CombinedParams {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 0.4,
            nfl: NflParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("prediction has {pred} values but ground truth has {gt}")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("empty input")]
    Empty,
    #[error("prediction {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
}

fn check(pred: &[f64], gt: &[bool]) -> Result<(), LossError> {
    if pred.len() != gt.len() {
        return Err(LossError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(LossError::Empty);
    }
    if let Some((index, &value)) = pred
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(LossError::OutOfRange { index, value });
    }
    Ok(())
}

impl NflParams {
    fn validate(&self) -> Result<(), LossError> {
        if !(self.alpha > 0.0) || !(self.gamma_focal >= 0.0) || !(self.epsilon > 0.0) {
            return Err(LossError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

#[inline]
fn p_true(p: f64, g: bool) -> f64 {
    if g {
        p
    } else {
        1.0 - p
    }
}

/// `m = N / (Σβ + ε)`, the per-image normalizer of the modulating factor.
pub fn nfl_normalizer(pred: &[f64], gt: &[bool], params: &NflParams) -> Result<f64, LossError> {
    check(pred, gt)?;
    params.validate()?;
    Ok(normalizer(pred, gt, params))
}

fn normalizer(pred: &[f64], gt: &[bool], params: &NflParams) -> f64 {
    let sum: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| (1.0 - p_true(p, g)).powf(params.gamma_focal))
        .sum();
    pred.len() as f64 / (sum + params.epsilon)
}

/// Focal loss with the modulating factor held at a given normalizer `m`.
pub fn nfl_with_normalizer(
    pred: &[f64],
    gt: &[bool],
    m: f64,
    params: &NflParams,
) -> Result<f64, LossError> {
    check(pred, gt)?;
    params.validate()?;
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            let pt = p_true(p, g);
            let beta = (1.0 - pt).powf(params.gamma_focal);
            -params.alpha * beta * m * (pt + params.epsilon).min(1.0).ln()
        })
        .sum();
    Ok(total / pred.len() as f64)
}

pub fn nfl(pred: &[f64], gt: &[bool], params: &NflParams) -> Result<f64, LossError> {
    check(pred, gt)?;
    params.validate()?;
    nfl_with_normalizer(pred, gt, normalizer(pred, gt, params), params)
}

/// Per-pixel `∂nfl/∂p`, treating the normalizer as a constant.
pub fn nfl_grad(pred: &[f64], gt: &[bool], params: &NflParams) -> Result<Vec<f64>, LossError> {
    check(pred, gt)?;
    params.validate()?;
    let m = normalizer(pred, gt, params);
    let n = pred.len() as f64;
    let gamma = params.gamma_focal;
    Ok(pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            let pt = p_true(p, g);
            let sign = if g { 1.0 } else { -1.0 };
            let q = pt + params.epsilon;
            let (log_q, dlog_q) = if q < 1.0 { (q.ln(), 1.0 / q) } else { (0.0, 0.0) };
            let miss = 1.0 - pt;
            let beta = miss.powf(gamma);
            let dbeta = if gamma == 0.0 || miss == 0.0 {
                0.0
            } else {
                -gamma * miss.powf(gamma - 1.0)
            };
            -params.alpha * m / n * sign * (dbeta * log_q + beta * dlog_q)
        })
        .collect())
}

/// Mean binary cross-entropy with logs clamped at `epsilon`.
pub fn bce(pred: &[f64], gt: &[bool], epsilon: f64) -> Result<f64, LossError> {
    check(pred, gt)?;
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| -p_true(p, g).max(epsilon).ln())
        .sum();
    Ok(total / pred.len() as f64)
}

pub fn combined(pred: &[f64], gt: &[bool], params: &CombinedParams) -> Result<f64, LossError> {
    if !(params.k1 >= 0.0 && params.k2 >= 0.0) {
        return Err(LossError::InvalidParams(format!("k1={} k2={}", params.k1, params.k2)));
    }
    let focal = nfl(pred, gt, &params.nfl)?;
    let cross = bce(pred, gt, params.nfl.epsilon)?;
    Ok(params.k1 * focal + params.k2 * cross)
}

/// Flatten raster types for the slice-based losses.
pub fn mask_inputs(pred: &ProbMask, gt: &BinaryMask) -> Result<(Vec<f64>, Vec<bool>), LossError> {
    if pred.dims() != gt.dims() {
        return Err(LossError::LengthMismatch {
            pred: pred.dims().len(),
            gt: gt.dims().len(),
        });
    }
    Ok((
        pred.as_slice().iter().map(|&p| p as f64).collect(),
        gt.as_slice().to_vec(),
    ))
}
