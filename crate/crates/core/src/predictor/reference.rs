use serde::{Deserialize, Serialize};

use super::{Predictor, PredictorError, PredictorInput};
use crate::clicks::Polarity;
use crate::raster::ProbMask;

/// Constants of the reference predictor. Distances are in patch pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceParams {
    /// Sigmoid temperature on the click-distance margin.
    pub tau: f64,
    /// Color affinity bandwidth, in RGB units.
    pub sigma_color: f64,
    /// Weight of the fresh estimate when blending with a nonempty previous mask.
    pub lambda: f64,
}

impl Default for ReferenceParams {
    fn default() -> Self {
        Self {
            tau: 16.0,
            sigma_color: 0.25,
            lambda: 0.7,
        }
    }
}

/// Deterministic classical stand-in for a trained network.
///
/// `p(x) = σ((d_neg(x) − d_pos(x)) / τ) · exp(−‖I(x) − Ī⁺‖² / 2σ_c²)`, where
/// `d_pos` / `d_neg` are distances to the nearest positive / negative click
/// center (`d_neg` capped at the patch diagonal when there are no negatives)
/// and `Ī⁺` is the mean color under the positive disks. With a nonempty
/// previous mask the result is blended as `λ·p + (1 − λ)·prev`. No positive
/// clicks yields all zeros.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReferenceClickPredictor {
    pub params: ReferenceParams,
}

impl ReferenceClickPredictor {
    pub fn new(params: ReferenceParams) -> Self {
        Self { params }
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Predictor for ReferenceClickPredictor {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        let dims = input.dims();
        let positives: Vec<(f64, f64)> = input
            .clicks
            .centers
            .iter()
            .filter(|c| c.polarity == Polarity::Positive)
            .map(|c| (c.y, c.x))
            .collect();
        let negatives: Vec<(f64, f64)> = input
            .clicks
            .centers
            .iter()
            .filter(|c| c.polarity == Polarity::Negative)
            .map(|c| (c.y, c.x))
            .collect();
        if positives.is_empty() {
            return Ok(ProbMask::zeros(dims));
        }

        let image = input.image.as_slice();
        let mut mean = [0.0f64; 3];
        let mut n = 0usize;
        for (i, &on) in input.clicks.positive.as_slice().iter().enumerate() {
            if on {
                for c in 0..3 {
                    mean[c] += image[i][c] as f64;
                }
                n += 1;
            }
        }
        if n == 0 {
            // centers but no disk pixels: sample the nearest pixel to each center
            for &(y, x) in &positives {
                let py = (y.round().max(0.0) as usize).min(dims.height - 1);
                let px = (x.round().max(0.0) as usize).min(dims.width - 1);
                let rgb = input.image.get(py, px);
                for c in 0..3 {
                    mean[c] += rgb[c] as f64;
                }
                n += 1;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let diagonal = ((dims.height * dims.height + dims.width * dims.width) as f64).sqrt();
        let inv_tau = 1.0 / self.params.tau;
        let inv_two_var = 1.0 / (2.0 * self.params.sigma_color * self.params.sigma_color);
        let prev = input.prev_mask.as_slice();
        let blend = !input.prev_mask.is_blank();
        let lambda = self.params.lambda;

        let mut out = Vec::with_capacity(dims.len());
        for y in 0..dims.height {
            let fy = y as f64;
            for x in 0..dims.width {
                let fx = x as f64;
                let nearest = |pts: &[(f64, f64)]| {
                    pts.iter()
                        .map(|&(cy, cx)| (fy - cy) * (fy - cy) + (fx - cx) * (fx - cx))
                        .fold(f64::INFINITY, f64::min)
                        .sqrt()
                };
                let d_pos = nearest(&positives);
                let d_neg = if negatives.is_empty() {
                    diagonal
                } else {
                    nearest(&negatives).min(diagonal)
                };
                let i = y * dims.width + x;
                let rgb = image[i];
                let dist2 = (0..3)
                    .map(|c| (rgb[c] as f64 - mean[c]).powi(2))
                    .sum::<f64>();
                let mut p = sigmoid((d_neg - d_pos) * inv_tau) * (-dist2 * inv_two_var).exp();
                if blend {
                    p = lambda * p + (1.0 - lambda) * if prev[i] { 1.0 } else { 0.0 };
                }
                out.push(p as f32);
            }
        }
        Ok(ProbMask::from_vec_clamped(dims, out).expect("dims checked by input"))
    }

    fn name(&self) -> &str {
        "reference"
    }
}
