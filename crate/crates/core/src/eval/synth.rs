use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Sample;
use crate::raster::{BinaryMask, Dims, RgbImage};

/// Side length of generated images.
pub const SYNTH_SIDE: usize = 256;

const BACKGROUND: [f32; 3] = [0.93, 0.78, 0.85];
const SPOT_STRENGTH: f32 = 0.65;

// stain-like object colors
const PALETTE: [[f32; 3]; 4] = [
    [0.52, 0.30, 0.62],
    [0.42, 0.16, 0.42],
    [0.36, 0.32, 0.72],
    [0.60, 0.38, 0.34],
];

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cy: f64,
    cx: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn contains(&self, y: f64, x: f64) -> bool {
        let (dy, dx) = (y - self.cy, x - self.cx);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// One synthetic stained-tissue image: a textured pink background with up to
/// three faded stain spots, and 1 to 3 filled ellipses, each in one of a few
/// stain colors. The ground truth is the union of the ellipses.
pub fn synthetic_sample(id: impl Into<String>, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = SYNTH_SIDE as f64;
    let count = rng.random_range(1..=3);
    let blobs: Vec<(Ellipse, [f32; 3])> = (0..count)
        .map(|_| {
            let a = rng.random_range(18.0..44.0);
            let b = rng.random_range(14.0..a);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let margin = a + 4.0;
            let base = PALETTE[rng.random_range(0..PALETTE.len())];
            let shade: f32 = rng.random_range(-0.04..0.04);
            let color = base.map(|c| c + shade);
            (
                Ellipse {
                    cy: rng.random_range(margin..side - margin),
                    cx: rng.random_range(margin..side - margin),
                    a,
                    b,
                    cos: theta.cos(),
                    sin: theta.sin(),
                },
                color,
            )
        })
        .collect();

    // faded stain spots in the background, not part of the target
    let spots: Vec<(Ellipse, [f32; 3])> = (0..rng.random_range(0..=3))
        .map(|_| {
            let r = rng.random_range(6.0..14.0);
            let base = PALETTE[rng.random_range(0..PALETTE.len())];
            let color = std::array::from_fn(|c| BACKGROUND[c] + SPOT_STRENGTH * (base[c] - BACKGROUND[c]));
            (
                Ellipse {
                    cy: rng.random_range(r..side - r),
                    cx: rng.random_range(r..side - r),
                    a: r,
                    b: r * rng.random_range(0.6..1.0),
                    cos: 1.0,
                    sin: 0.0,
                },
                color,
            )
        })
        .collect();

    let phase: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let dims = Dims::new(SYNTH_SIDE, SYNTH_SIDE);
    let mut gt = BinaryMask::new(dims);
    let mut data = Vec::with_capacity(dims.len());
    for y in 0..SYNTH_SIDE {
        for x in 0..SYNTH_SIDE {
            let (fy, fx) = (y as f64 + 0.5, x as f64 + 0.5);
            let grain: f32 = rng.random_range(-0.02..0.02);
            let inside = blobs.iter().find(|(e, _)| e.contains(fy, fx));
            let rgb = match inside {
                Some((_, c)) => {
                    gt.set(y, x, true);
                    [c[0] + grain, c[1] + grain, c[2] + grain]
                }
                None => {
                    let wave = 0.025 * ((fy / 23.0 + phase[0]).sin() * (fx / 31.0 + phase[1]).cos())
                        + 0.015 * ((fx / 9.0 + phase[2]).sin() + (fy / 13.0 + phase[3]).cos());
                    let t = (wave as f32) + grain;
                    let base = spots
                        .iter()
                        .find(|(e, _)| e.contains(fy, fx))
                        .map_or(BACKGROUND, |(_, c)| *c);
                    [base[0] + t, base[1] + t, base[2] + t * 0.8]
                }
            };
            data.push(rgb.map(|c| c.clamp(0.0, 1.0)));
        }
    }
    let image = RgbImage::from_vec(dims, data).expect("sized to dims");
    Sample {
        id: id.into(),
        image,
        gt,
    }
}

/// `n` samples with ids `synth-0000`, ... Sample `i` depends only on
/// `(seed, i)`.
pub fn synthetic_suite(n: usize, seed: u64) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let s = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64);
            synthetic_sample(format!("synth-{i:04}"), s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_reproducible_and_valid() {
        let a = synthetic_suite(4, 5);
        let b = synthetic_suite(4, 5);
        assert_eq!(a, b);
        for s in &a {
            assert_eq!(s.image.dims(), Dims::new(256, 256));
            assert!(s.gt.count() > 500, "{} has {} fg pixels", s.id, s.gt.count());
            assert!(s.gt.count() < s.gt.dims().len());
        }
        assert_ne!(synthetic_suite(1, 6)[0].gt, a[0].gt);
    }
}
