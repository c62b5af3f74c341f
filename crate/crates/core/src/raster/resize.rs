//! Resampling with half-pixel-center alignment: destination pixel `i` samples
//! source coordinate `(i + 0.5) * src / dst - 0.5`.

use super::{BinaryMask, Dims, ProbMask, RgbImage};

#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f32,
}

fn bilinear_taps(src: usize, dst: usize) -> Vec<Tap> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            Tap {
                lo,
                hi,
                frac: (s - lo as f64) as f32,
            }
        })
        .collect()
}

fn nearest_index(src: usize, dst: usize) -> Vec<usize> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| (((i as f64 + 0.5) * scale) as usize).min(src - 1))
        .collect()
}

fn bilinear<T: Copy>(
    src: &[T],
    from: Dims,
    to: Dims,
    mix: impl Fn(T, T, f32) -> T,
) -> Vec<T> {
    let ys = bilinear_taps(from.height, to.height);
    let xs = bilinear_taps(from.width, to.width);
    let mut out = Vec::with_capacity(to.len());
    let mut top = Vec::with_capacity(to.width);
    let mut bottom = Vec::with_capacity(to.width);
    for ty in &ys {
        let r0 = &src[ty.lo * from.width..(ty.lo + 1) * from.width];
        let r1 = &src[ty.hi * from.width..(ty.hi + 1) * from.width];
        top.clear();
        bottom.clear();
        for tx in &xs {
            top.push(mix(r0[tx.lo], r0[tx.hi], tx.frac));
            bottom.push(mix(r1[tx.lo], r1[tx.hi], tx.frac));
        }
        out.extend(top.iter().zip(&bottom).map(|(&a, &b)| mix(a, b, ty.frac)));
    }
    out
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}

/// Bilinear resize of a probability raster.
pub fn resize_prob(src: &ProbMask, to: Dims) -> ProbMask {
    if src.dims() == to {
        return src.clone();
    }
    let data = bilinear(src.as_slice(), src.dims(), to, lerp);
    ProbMask::from_vec_clamped(to, data).expect("target dims must be nonzero")
}

/// Bilinear resize of an RGB image.
pub fn resize_image(src: &RgbImage, to: Dims) -> RgbImage {
    if src.dims() == to {
        return src.clone();
    }
    let data = bilinear(src.as_slice(), src.dims(), to, |a, b, t| {
        [lerp(a[0], b[0], t), lerp(a[1], b[1], t), lerp(a[2], b[2], t)]
    });
    RgbImage::from_vec(to, data).expect("target dims must be nonzero")
}

/// Nearest-neighbor resize of a binary mask.
pub fn resize_mask(src: &BinaryMask, to: Dims) -> BinaryMask {
    if src.dims() == to {
        return src.clone();
    }
    let from = src.dims();
    let ys = nearest_index(from.height, to.height);
    let xs = nearest_index(from.width, to.width);
    let data = src.as_slice();
    let mut out = Vec::with_capacity(to.len());
    for &sy in &ys {
        let row = &data[sy * from.width..(sy + 1) * from.width];
        out.extend(xs.iter().map(|&sx| row[sx]));
    }
    BinaryMask::from_vec(to, out).expect("target dims must be nonzero")
}
