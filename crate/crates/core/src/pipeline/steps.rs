use super::{PipelineError, RefineClicks, SessionConfig};
use crate::clicks::{encode_clicks, encode_clicks_unclipped, Click, ClickChannels, PatchTransform};
use crate::predictor::{Predictor, PredictorInput};
use crate::raster::{
    bounding_box, expand_rect, resize_image, resize_mask, BinaryMask, Dims, Rect, RgbImage,
};

/// Crop region for the coarse pass.
///
/// The very first click sees the whole image. Afterwards the region is the
/// bounding box of the previous mask's foreground and all click pixels,
/// scaled by `crop_expand`, clipped to the image, and grown symmetrically up
/// to a quarter of the working size per side.
pub fn compute_crop_roi(
    prev_mask: &BinaryMask,
    clicks: &[Click],
    image: Dims,
    cfg: &SessionConfig,
) -> Rect {
    let full = image.full_rect();
    let prev_box = bounding_box(prev_mask);
    if prev_box.is_none() && clicks.len() <= 1 {
        return full;
    }
    let Some(content) = clicks
        .iter()
        .map(|c| Rect::pixel(c.y, c.x))
        .chain(prev_box)
        .reduce(|a, b| a.union(&b))
    else {
        return full;
    };
    let roi = expand_rect(content, cfg.crop_expand, full);
    let (y1, y2) = grow_span(roi.y1, roi.y2, cfg.working_dims.height / 4, image.height);
    let (x1, x2) = grow_span(roi.x1, roi.x2, cfg.working_dims.width / 4, image.width);
    Rect::new(y1, y2, x1, x2)
}

/// Widen `[lo, hi)` to at least `min_len` (capped at `limit`), splitting the
/// growth evenly and shifting back inside `[0, limit)`.
fn grow_span(lo: usize, hi: usize, min_len: usize, limit: usize) -> (usize, usize) {
    let target = min_len.min(limit);
    let len = hi - lo;
    if len >= target {
        return (lo, hi);
    }
    let grow = target - len;
    let mut new_lo = lo as i64 - (grow / 2) as i64;
    let mut new_hi = hi as i64 + (grow - grow / 2) as i64;
    if new_lo < 0 {
        new_hi -= new_lo;
        new_lo = 0;
    }
    if new_hi > limit as i64 {
        new_lo -= new_hi - limit as i64;
        new_hi = limit as i64;
    }
    (new_lo.max(0) as usize, new_hi as usize)
}

/// Working resolution for a predictor call.
pub(crate) fn working_dims(predictor: &dyn Predictor, cfg: &SessionConfig) -> Dims {
    predictor
        .capabilities()
        .fixed_input_dims
        .unwrap_or(cfg.working_dims)
}

/// Crop `roi` from image and prior mask, resample to the working size, run the
/// predictor once and return the thresholded result at `roi` resolution.
pub fn predict_region(
    image: &RgbImage,
    prior: &BinaryMask,
    roi: Rect,
    clicks: &[Click],
    predictor: &dyn Predictor,
    cfg: &SessionConfig,
) -> Result<BinaryMask, PipelineError> {
    let work = working_dims(predictor, cfg);
    let channels = encode_clicks(clicks, cfg.click_radius, &PatchTransform::new(roi, work));
    predict_encoded(image, prior, roi, channels, predictor, cfg)
}

fn predict_encoded(
    image: &RgbImage,
    prior: &BinaryMask,
    roi: Rect,
    channels: ClickChannels,
    predictor: &dyn Predictor,
    cfg: &SessionConfig,
) -> Result<BinaryMask, PipelineError> {
    let work = channels.dims();
    let patch_image = resize_image(&image.crop(roi), work);
    let patch_prior = resize_mask(&prior.crop(roi), work);
    let input = PredictorInput::new(patch_image, channels, patch_prior)?;
    let prob = predictor.predict(&input)?;
    Ok(resize_mask(&prob.threshold(cfg.binarize_threshold), roi.dims()))
}

/// Force every click pixel to its polarity.
pub fn enforce_clicks(mask: &mut BinaryMask, clicks: &[Click]) {
    for c in clicks {
        mask.set(c.y, c.x, c.polarity.is_positive());
    }
}

/// Coarse pass over `roi`. Pixels outside the crop keep the previous mask.
pub fn coarse_step(
    image: &RgbImage,
    prev_mask: &BinaryMask,
    clicks: &[Click],
    roi: Rect,
    predictor: &dyn Predictor,
    cfg: &SessionConfig,
) -> Result<BinaryMask, PipelineError> {
    let patch = predict_region(image, prev_mask, roi, clicks, predictor, cfg)?;
    let mut coarse = prev_mask.clone();
    coarse.paste(&patch, roi);
    if cfg.enforce_click_consistency {
        enforce_clicks(&mut coarse, clicks);
    }
    Ok(coarse)
}

/// Re-predict the Local Patch at working resolution and paste it into the
/// coarse mask. `cfg.refine_clicks` decides whether clicks outside the patch
/// are encoded.
pub fn refine_step(
    image: &RgbImage,
    coarse: &BinaryMask,
    patch: Rect,
    clicks: &[Click],
    predictor: &dyn Predictor,
    cfg: &SessionConfig,
) -> Result<BinaryMask, PipelineError> {
    let transform = PatchTransform::new(patch, working_dims(predictor, cfg));
    let channels = match cfg.refine_clicks {
        RefineClicks::InsidePatch => encode_clicks(clicks, cfg.click_radius, &transform),
        RefineClicks::All => encode_clicks_unclipped(clicks, cfg.click_radius, &transform),
    };
    let local = predict_encoded(image, coarse, patch, channels, predictor, cfg)?;
    let mut refined = coarse.clone();
    refined.paste(&local, patch);
    if cfg.enforce_click_consistency {
        enforce_clicks(&mut refined, clicks);
    }
    Ok(refined)
}
