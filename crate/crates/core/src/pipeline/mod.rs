//! The click loop: coarse prediction for the first `n_trigger` clicks, then
//! coarse prediction followed by Local Patch refinement and selective merge.

mod merge;
mod patch;
mod steps;

pub use merge::variance_merge;
pub use patch::{
    select_local_patch, select_local_patch_traced, PatchBranch, SMALL_CORRECTION_RATIO,
    SQUARE_FRACTION,
};
pub use steps::{coarse_step, compute_crop_roi, enforce_clicks, predict_region, refine_step};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clicks::{Click, Polarity};
use crate::predictor::{Predictor, PredictorError, SharedPredictor};
use crate::raster::{BinaryMask, Connectivity, Dims, RasterError, Rect, RgbImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Clicks handled by the coarse pass alone; refinement starts at click `n_trigger + 1`.
    pub n_trigger: usize,
    /// Predictor input size.
    pub working_dims: Dims,
    /// Expansion ratio applied to the Local Patch.
    pub gamma_expand: f64,
    /// Expansion ratio applied to the coarse crop.
    pub crop_expand: f64,
    /// Click disk radius in working-resolution pixels.
    pub click_radius: f64,
    pub binarize_threshold: f32,
    pub enforce_click_consistency: bool,
    /// Evaluation budget.
    pub max_clicks: usize,
    /// Hard cap on clicks per session.
    pub click_cap: usize,
    pub connectivity: Connectivity,
    /// Which clicks the local refinement pass sees.
    pub refine_clicks: RefineClicks,
}

/// Click set handed to the local refinement pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineClicks {
    /// Only clicks lying inside the Local Patch.
    #[default]
    InsidePatch,
    /// Every click of the session, including those outside the patch.
    All,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_trigger: 5,
            working_dims: Dims::new(512, 512),
            gamma_expand: 1.4,
            crop_expand: 1.4,
            click_radius: 5.0,
            binarize_threshold: 0.5,
            enforce_click_consistency: true,
            max_clicks: 20,
            click_cap: 256,
            connectivity: Connectivity::Four,
            refine_clicks: RefineClicks::InsidePatch,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidConfig(msg));
        if self.n_trigger < 1 {
            return bad("n_trigger must be at least 1".into());
        }
        if self.working_dims.is_empty() {
            return bad(format!("working_dims must be nonzero, got {}", self.working_dims));
        }
        if !(self.gamma_expand >= 1.0) || !self.gamma_expand.is_finite() {
            return bad(format!("gamma_expand must be >= 1, got {}", self.gamma_expand));
        }
        if !(self.crop_expand >= 1.0) || !self.crop_expand.is_finite() {
            return bad(format!("crop_expand must be >= 1, got {}", self.crop_expand));
        }
        if !(self.click_radius >= 1.0) {
            return bad(format!("click_radius must be >= 1, got {}", self.click_radius));
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return bad(format!(
                "binarize_threshold must lie in (0, 1), got {}",
                self.binarize_threshold
            ));
        }
        if self.max_clicks < 1 {
            return bad("max_clicks must be at least 1".into());
        }
        if self.click_cap < self.max_clicks {
            return bad(format!(
                "click_cap {} must be >= max_clicks {}",
                self.click_cap, self.max_clicks
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("click ({y}, {x}) outside {dims} image")]
    ClickOutOfBounds { y: i64, x: i64, dims: Dims },
    #[error("session already holds the maximum of {0} clicks")]
    ClickCap(usize),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Coarse,
    Refined,
}

/// Result of one interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub mask: BinaryMask,
    pub phase: Phase,
    /// Present iff `phase == Refined`.
    pub local_patch: Option<Rect>,
    pub elapsed: Duration,
    pub click_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub clicks: Vec<Click>,
    /// Mask fed back to the next iteration.
    pub prev_mask: BinaryMask,
    /// Mask shown to the user.
    pub cur_mask: BinaryMask,
    /// Coarse crop used by the latest click.
    pub crop_roi: Rect,
    pub phase: Phase,
    pub local_patch: Option<Rect>,
    /// Wall time of every accepted click.
    pub timings: Vec<Duration>,
}

impl SessionState {
    fn fresh(dims: Dims) -> Self {
        Self {
            clicks: Vec::new(),
            prev_mask: BinaryMask::new(dims),
            cur_mask: BinaryMask::new(dims),
            crop_roi: dims.full_rect(),
            phase: Phase::Coarse,
            local_patch: None,
            timings: Vec::new(),
        }
    }

    pub fn click_count(&self) -> usize {
        self.clicks.len()
    }
}

/// One annotation session over one image. Both passes of every click go
/// through the same predictor handle.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    predictor: SharedPredictor,
    image: RgbImage,
    state: SessionState,
    undo: Vec<SessionState>,
}

impl Session {
    pub fn new(
        image: RgbImage,
        predictor: SharedPredictor,
        config: SessionConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let dims = image.dims();
        Ok(Self {
            config,
            predictor,
            image,
            state: SessionState::fresh(dims),
            undo: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn dims(&self) -> Dims {
        self.image.dims()
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn predictor(&self) -> &SharedPredictor {
        &self.predictor
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.state.cur_mask
    }

    pub fn click_count(&self) -> usize {
        self.state.clicks.len()
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    /// Add a click at signed coordinates, rejecting anything off the image.
    pub fn add_click_checked(
        &mut self,
        y: i64,
        x: i64,
        polarity: Polarity,
    ) -> Result<StepOutput, PipelineError> {
        let dims = self.dims();
        if y < 0 || x < 0 || !dims.contains(y as usize, x as usize) {
            return Err(PipelineError::ClickOutOfBounds { y, x, dims });
        }
        self.add_click(y as usize, x as usize, polarity)
    }

    /// Run one iteration of the loop. On error the session is left untouched.
    pub fn add_click(
        &mut self,
        y: usize,
        x: usize,
        polarity: Polarity,
    ) -> Result<StepOutput, PipelineError> {
        let started = Instant::now();
        let dims = self.dims();
        if !dims.contains(y, x) {
            return Err(PipelineError::ClickOutOfBounds {
                y: y as i64,
                x: x as i64,
                dims,
            });
        }
        if self.state.clicks.len() >= self.config.click_cap {
            return Err(PipelineError::ClickCap(self.config.click_cap));
        }

        let cfg = &self.config;
        let predictor: &dyn Predictor = &self.predictor;
        let click = Click::new(y, x, polarity, self.state.clicks.len() as u32 + 1);
        let mut clicks = self.state.clicks.clone();
        clicks.push(click);
        let previous = &self.state.prev_mask;

        let roi = compute_crop_roi(previous, &clicks, dims, cfg);
        let coarse = coarse_step(&self.image, previous, &clicks, roi, predictor, cfg)?;

        let (mask, phase, local_patch) = if clicks.len() <= cfg.n_trigger {
            (coarse, Phase::Coarse, None)
        } else {
            let patch = select_local_patch(
                &coarse,
                previous,
                roi,
                (y, x),
                cfg.gamma_expand,
                cfg.connectivity,
            )?;
            let refined = refine_step(&self.image, &coarse, patch, &clicks, predictor, cfg)?;
            let merged = variance_merge(&refined, previous, &click, cfg.connectivity)?;
            (merged, Phase::Refined, Some(patch))
        };

        let elapsed = started.elapsed();
        let mut timings = self.state.timings.clone();
        timings.push(elapsed);
        let next = SessionState {
            clicks,
            prev_mask: mask.clone(),
            cur_mask: mask.clone(),
            crop_roi: roi,
            phase,
            local_patch,
            timings,
        };
        self.undo.push(std::mem::replace(&mut self.state, next));
        Ok(StepOutput {
            mask,
            phase,
            local_patch,
            elapsed,
            click_count: self.state.clicks.len(),
        })
    }

    /// Restore the state before the latest click.
    pub fn undo(&mut self) -> Result<StepOutput, PipelineError> {
        let started = Instant::now();
        let restored = self.undo.pop().ok_or(PipelineError::NothingToUndo)?;
        self.state = restored;
        Ok(self.current_output(started.elapsed()))
    }

    /// The current mask wrapped as a step result.
    pub fn current_output(&self, elapsed: Duration) -> StepOutput {
        StepOutput {
            mask: self.state.cur_mask.clone(),
            phase: self.state.phase,
            local_patch: self.state.local_patch,
            elapsed,
            click_count: self.state.clicks.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{PredictorInput, ReferenceClickPredictor};
    use crate::raster::ProbMask;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Zero;
    impl Predictor for Zero {
        fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
            Ok(ProbMask::zeros(input.dims()))
        }
    }

    struct Constant(f32);
    impl Predictor for Constant {
        fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
            Ok(ProbMask::constant(input.dims(), self.0))
        }
    }

    struct EchoPrev;
    impl Predictor for EchoPrev {
        fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
            Ok(ProbMask::from_mask(&input.prev_mask))
        }
    }

    /// Fails on the n-th call (1-based), succeeds otherwise.
    struct FailOn {
        calls: AtomicUsize,
        fail_at: usize,
    }
    impl Predictor for FailOn {
        fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if n == self.fail_at {
                return Err(PredictorError::Backend("boom".into()));
            }
            ReferenceClickPredictor::default().predict(input)
        }
    }

    fn image(d: Dims) -> RgbImage {
        RgbImage::from_fn(d, |y, x| {
            if (10..30).contains(&y) && (10..30).contains(&x) {
                [0.6, 0.2, 0.6]
            } else {
                [0.95, 0.9, 0.9]
            }
        })
    }

    fn small_cfg() -> SessionConfig {
        SessionConfig {
            working_dims: Dims::new(64, 64),
            ..SessionConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SessionConfig::default().validate().is_ok());
        for bad in [
            SessionConfig { n_trigger: 0, ..Default::default() },
            SessionConfig { gamma_expand: 0.9, ..Default::default() },
            SessionConfig { binarize_threshold: 1.0, ..Default::default() },
            SessionConfig { click_cap: 5, ..Default::default() },
            SessionConfig { click_radius: 0.5, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn config_overrides_from_json() {
        let cfg: SessionConfig = serde_json::from_str(r#"{"n_trigger": 7}"#).unwrap();
        assert_eq!(cfg.n_trigger, 7);
        assert_eq!(cfg.gamma_expand, 1.4);
        assert!(serde_json::from_str::<SessionConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn zero_predictor_keeps_only_click_pixel() {
        let d = Dims::new(40, 40);
        let cfg = small_cfg();
        let clicks = [Click::positive(15, 15, 1)];
        let m = coarse_step(&image(d), &BinaryMask::new(d), &clicks, d.full_rect(), &Zero, &cfg)
            .unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(15, 15));
    }

    #[test]
    fn below_threshold_constant_is_background() {
        let d = Dims::new(40, 40);
        let cfg = SessionConfig {
            enforce_click_consistency: false,
            ..small_cfg()
        };
        let clicks = [Click::positive(15, 15, 1)];
        let p = Constant(0.5 - 1e-4);
        let m = coarse_step(&image(d), &BinaryMask::new(d), &clicks, d.full_rect(), &p, &cfg)
            .unwrap();
        assert!(m.is_blank());
    }

    #[test]
    fn coarse_keeps_previous_outside_roi() {
        let d = Dims::new(40, 40);
        let prev = BinaryMask::from_fn(d, |y, x| y < 5 && x < 5);
        let roi = Rect::new(20, 40, 20, 40);
        let m = coarse_step(&image(d), &prev, &[], roi, &Zero, &small_cfg()).unwrap();
        assert_eq!(m, prev);
    }

    #[test]
    fn echo_refinement_is_identity() {
        let d = Dims::new(40, 40);
        let coarse = BinaryMask::from_fn(d, |y, x| (8..25).contains(&y) && (12..33).contains(&x));
        let clicks = [Click::positive(10, 20, 1)];
        let r = refine_step(&image(d), &coarse, Rect::new(5, 30, 5, 35), &clicks, &EchoPrev, &small_cfg())
            .unwrap();
        assert_eq!(r, coarse);
    }

    #[test]
    fn phase_follows_trigger() {
        let d = Dims::new(40, 40);
        let cfg = SessionConfig {
            n_trigger: 2,
            ..small_cfg()
        };
        let mut s = Session::new(image(d), SharedPredictor::new(ReferenceClickPredictor::default()), cfg)
            .unwrap();
        let a = s.add_click(20, 20, Polarity::Positive).unwrap();
        let b = s.add_click(2, 2, Polarity::Negative).unwrap();
        let c = s.add_click(35, 35, Polarity::Negative).unwrap();
        assert_eq!((a.phase, b.phase, c.phase), (Phase::Coarse, Phase::Coarse, Phase::Refined));
        assert!(a.local_patch.is_none() && b.local_patch.is_none());
        assert!(c.local_patch.is_some());
        assert_eq!(c.click_count, 3);
    }

    #[test]
    fn undo_restores_exact_state() {
        let d = Dims::new(40, 40);
        let mut s = Session::new(image(d), SharedPredictor::new(ReferenceClickPredictor::default()), small_cfg())
            .unwrap();
        assert!(matches!(s.undo(), Err(PipelineError::NothingToUndo)));
        let fresh = s.state().clone();
        s.add_click(20, 20, Polarity::Positive).unwrap();
        let after_one = s.state().clone();
        s.add_click(3, 3, Polarity::Negative).unwrap();
        s.undo().unwrap();
        assert_eq!(s.state(), &after_one);
        let out = s.undo().unwrap();
        assert_eq!(s.state(), &fresh);
        assert!(out.mask.is_blank());
        assert_eq!(out.click_count, 0);
    }

    #[test]
    fn predictor_failure_leaves_state_untouched() {
        let d = Dims::new(40, 40);
        let cfg = SessionConfig {
            n_trigger: 1,
            ..small_cfg()
        };
        // call 1: click 1 coarse; call 2: click 2 coarse; call 3: click 2 refine -> fails
        let p = Arc::new(FailOn {
            calls: AtomicUsize::new(0),
            fail_at: 3,
        });
        let mut s = Session::new(image(d), SharedPredictor::from_arc(p), cfg).unwrap();
        s.add_click(20, 20, Polarity::Positive).unwrap();
        let before = s.state().clone();
        let depth = s.undo_depth();
        assert!(matches!(
            s.add_click(5, 5, Polarity::Negative),
            Err(PipelineError::Predictor(_))
        ));
        assert_eq!(s.state(), &before);
        assert_eq!(s.undo_depth(), depth);
    }

    #[test]
    fn out_of_bounds_and_cap() {
        let d = Dims::new(20, 20);
        let cfg = SessionConfig {
            max_clicks: 2,
            click_cap: 2,
            working_dims: Dims::new(32, 32),
            ..SessionConfig::default()
        };
        let mut s = Session::new(image(d), SharedPredictor::new(Zero), cfg).unwrap();
        assert!(matches!(
            s.add_click_checked(-1, 0, Polarity::Positive),
            Err(PipelineError::ClickOutOfBounds { .. })
        ));
        assert!(s.add_click(20, 0, Polarity::Positive).is_err());
        s.add_click(1, 1, Polarity::Positive).unwrap();
        s.add_click(2, 2, Polarity::Positive).unwrap();
        assert!(matches!(
            s.add_click(3, 3, Polarity::Positive),
            Err(PipelineError::ClickCap(2))
        ));
        assert_eq!(s.click_count(), 2);
    }
}
