//! Simulated annotator: random initial clicks, the corrective-click oracle and
//! gradient-free rollout of training states.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clicks::{Click, Polarity};
use crate::pipeline::{coarse_step, PipelineError, SessionConfig};
use crate::predictor::Predictor;
use crate::raster::{
    boundary_distance, connected_components, largest_component, mask_xor, BinaryMask,
    Connectivity, RasterError, RgbImage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub max_positive: usize,
    pub max_negative: usize,
    /// Ratio of successive count probabilities, `P(k + 1) / P(k)`.
    pub decay: f64,
    /// Upper bound on corrective rounds; each rollout draws uniformly from `0..=corrective_rounds`.
    pub corrective_rounds: usize,
    pub reset_probability: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            max_positive: 24,
            max_negative: 24,
            decay: 0.7,
            corrective_rounds: 3,
            reset_probability: 0.05,
            seed: 17,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.max_positive < 1 {
            return bad("max_positive must be at least 1".into());
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return bad(format!("decay must be positive, got {}", self.decay));
        }
        if self.corrective_rounds > 3 {
            return bad(format!("corrective_rounds must be at most 3, got {}", self.corrective_rounds));
        }
        if !(0.0..=1.0).contains(&self.reset_probability) {
            return bad(format!(
                "reset_probability must lie in [0, 1], got {}",
                self.reset_probability
            ));
        }
        Ok(())
    }

    /// Fresh generator seeded from `seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("ground truth must contain both foreground and background")]
    DegenerateGroundTruth,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Draw `k` from `lo..=hi` with `P(k) ∝ decay^k`.
pub fn sample_count<R: Rng + ?Sized>(lo: usize, hi: usize, decay: f64, rng: &mut R) -> usize {
    if hi <= lo {
        return lo;
    }
    // relative to decay^lo so tiny decays do not underflow the first weight
    let weights: Vec<f64> = (0..=hi - lo).map(|j| decay.powi(j as i32)).collect();
    let dist = WeightedIndex::new(&weights).expect("first weight is 1");
    lo + dist.sample(rng)
}

/// Random initial clicks: 1..=max_positive on the foreground and
/// 0..=max_negative on the background, distinct pixels, positives first.
pub fn sample_initial_clicks<R: Rng + ?Sized>(
    gt: &BinaryMask,
    cfg: &SimulationConfig,
    rng: &mut R,
) -> Result<Vec<Click>, SimulationError> {
    let foreground: Vec<usize> = (0..gt.as_slice().len()).filter(|&i| gt.as_slice()[i]).collect();
    let background: Vec<usize> = (0..gt.as_slice().len()).filter(|&i| !gt.as_slice()[i]).collect();
    if foreground.is_empty() || background.is_empty() {
        return Err(SimulationError::DegenerateGroundTruth);
    }
    let k_pos = sample_count(1, cfg.max_positive, cfg.decay, rng).min(foreground.len());
    let k_neg = sample_count(0, cfg.max_negative, cfg.decay, rng).min(background.len());

    let width = gt.width();
    let mut clicks = Vec::with_capacity(k_pos + k_neg);
    for (pool, k, polarity) in [
        (&foreground, k_pos, Polarity::Positive),
        (&background, k_neg, Polarity::Negative),
    ] {
        for j in index::sample(rng, pool.len(), k) {
            let i = pool[j];
            let n = clicks.len() as u32 + 1;
            clicks.push(Click::new(i / width, i % width, polarity, n));
        }
    }
    Ok(clicks)
}

/// Corrective click for the largest error region: the interior-most pixel of
/// the largest component of `pred xor gt`, positive for a missed region and
/// negative for a spurious one. `None` when `pred == gt`.
pub fn next_corrective_click(
    pred: &BinaryMask,
    gt: &BinaryMask,
    index: u32,
) -> Result<Option<Click>, RasterError> {
    let error = mask_xor(pred, gt)?;
    let components = connected_components(&error, Connectivity::Four);
    let Some(largest) = largest_component(&components) else {
        return Ok(None);
    };
    let (y, x, _) = boundary_distance(&largest.to_mask(gt.dims())).argmax();
    Ok(Some(Click::new(y, x, Polarity::from_foreground(gt.get(y, x)), index)))
}

/// A simulated segmentation state for training an external model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    /// Clicks that produced `prev_mask`.
    pub clicks: Vec<Click>,
    pub prev_mask: BinaryMask,
    /// The next click the oracle would place; `None` once the mask is exact.
    pub corrective: Option<Click>,
    /// Corrective rounds actually run.
    pub rounds: usize,
    pub reset: bool,
}

impl TrainingState {
    pub fn converged(&self) -> bool {
        self.corrective.is_none()
    }
}

/// Roll out random clicks plus a few oracle corrections without learning.
///
/// The number of rounds is uniform in `0..=corrective_rounds`. With
/// probability `reset_probability` one uniformly chosen round starts by
/// clearing all clicks and the mask. Each prediction is a coarse pass over the
/// whole image.
pub fn simulate_training_state<R: Rng + ?Sized>(
    image: &RgbImage,
    gt: &BinaryMask,
    predictor: &dyn Predictor,
    sim: &SimulationConfig,
    session: &SessionConfig,
    rng: &mut R,
) -> Result<TrainingState, SimulationError> {
    sim.validate()?;
    let dims = image.dims();
    if gt.dims() != dims {
        return Err(RasterError::DimensionMismatch {
            left: dims,
            right: gt.dims(),
        }
        .into());
    }
    let full = dims.full_rect();
    let mut clicks = sample_initial_clicks(gt, sim, rng)?;
    let rounds = rng.random_range(0..=sim.corrective_rounds);
    let reset_at = (rounds > 0 && rng.random_bool(sim.reset_probability))
        .then(|| rng.random_range(0..rounds));

    let empty = BinaryMask::new(dims);
    let mut mask = coarse_step(image, &empty, &clicks, full, predictor, session)?;
    let mut done = 0;
    for round in 0..rounds {
        if reset_at == Some(round) {
            clicks.clear();
            mask = empty.clone();
        }
        let Some(click) = next_corrective_click(&mask, gt, clicks.len() as u32 + 1)? else {
            break;
        };
        clicks.push(click);
        mask = coarse_step(image, &mask, &clicks, full, predictor, session)?;
        done += 1;
    }
    let corrective = next_corrective_click(&mask, gt, clicks.len() as u32 + 1)?;
    Ok(TrainingState {
        clicks,
        prev_mask: mask,
        corrective,
        rounds: done,
        reset: reset_at.is_some(),
    })
}
