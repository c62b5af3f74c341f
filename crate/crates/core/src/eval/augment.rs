use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::raster::{resize_image, resize_mask, BinaryMask, Dims, Rect, RgbImage};

/// Training-time augmentation constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentParams {
    pub scale_mean: f64,
    pub scale_sd: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub flip_probability: f64,
    pub output: Dims,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            scale_mean: 0.8,
            scale_sd: 0.4,
            scale_min: 0.3,
            scale_max: 1.3,
            flip_probability: 0.3,
            output: Dims::new(512, 512),
        }
    }
}

/// The random choices behind one augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub scale: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
}

impl AugmentPlan {
    pub const IDENTITY: AugmentPlan = AugmentPlan {
        scale: 1.0,
        flip_horizontal: false,
        flip_vertical: false,
    };
}

/// Normal draw restricted to `[min, max]` by rejection.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, min: f64, max: f64, rng: &mut R) -> f64 {
    let normal = Normal::new(mean, sd).expect("finite positive sd");
    loop {
        let v = normal.sample(rng);
        if (min..=max).contains(&v) {
            return v;
        }
    }
}

pub fn draw_plan<R: Rng + ?Sized>(params: &AugmentParams, rng: &mut R) -> AugmentPlan {
    let scale = truncated_normal(
        params.scale_mean,
        params.scale_sd,
        params.scale_min,
        params.scale_max,
        rng,
    );
    AugmentPlan {
        scale,
        flip_horizontal: rng.random_bool(params.flip_probability),
        flip_vertical: rng.random_bool(params.flip_probability),
    }
}

/// Offsets for center pad (`dst > src`) or center crop (`dst < src`) along one axis.
fn center_span(src: usize, dst: usize) -> (usize, usize, usize) {
    // (offset into src, offset into dst, length)
    if src >= dst {
        ((src - dst) / 2, 0, dst)
    } else {
        (0, (dst - src) / 2, src)
    }
}

/// Scale, center pad or crop to `params.output`, then flip. Padding is black
/// image and background mask.
pub fn apply_plan(
    image: &RgbImage,
    mask: &BinaryMask,
    plan: &AugmentPlan,
    params: &AugmentParams,
) -> (RgbImage, BinaryMask) {
    let src = image.dims();
    let scaled = Dims::new(
        ((src.height as f64 * plan.scale).round() as usize).max(1),
        ((src.width as f64 * plan.scale).round() as usize).max(1),
    );
    let (img, msk) = if scaled == src {
        (image.clone(), mask.clone())
    } else {
        (resize_image(image, scaled), resize_mask(mask, scaled))
    };

    let out = params.output;
    let (sy, dy, h) = center_span(scaled.height, out.height);
    let (sx, dx, w) = center_span(scaled.width, out.width);
    let src_rect = Rect::new(sy, sy + h, sx, sx + w);
    let dst_rect = Rect::new(dy, dy + h, dx, dx + w);
    let mut out_img = RgbImage::filled(out, [0.0; 3]);
    let mut out_mask = BinaryMask::new(out);
    let crop_img = img.crop(src_rect);
    let crop_mask = msk.crop(src_rect);
    for y in 0..h {
        for x in 0..w {
            out_img.set(dst_rect.y1 + y, dst_rect.x1 + x, crop_img.get(y, x));
            out_mask.set(dst_rect.y1 + y, dst_rect.x1 + x, crop_mask.get(y, x));
        }
    }
    if plan.flip_horizontal {
        out_img = out_img.flip_horizontal();
        out_mask = out_mask.flip_horizontal();
    }
    if plan.flip_vertical {
        out_img = out_img.flip_vertical();
        out_mask = out_mask.flip_vertical();
    }
    (out_img, out_mask)
}

pub fn augment_sample<R: Rng + ?Sized>(
    image: &RgbImage,
    mask: &BinaryMask,
    params: &AugmentParams,
    rng: &mut R,
) -> (RgbImage, BinaryMask, AugmentPlan) {
    let plan = draw_plan(params, rng);
    let (i, m) = apply_plan(image, mask, &plan, params);
    (i, m, plan)
}
