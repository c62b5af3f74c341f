use super::{BinaryMask, Dims};

/// Per-pixel Euclidean distance to the nearest background pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    dims: Dims,
    data: Vec<f64>,
}

impl DistanceMap {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.dims.width + x]
    }

    /// Position of the maximum value; ties go to the first in row-major order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 / self.dims.width, best.0 % self.dims.width, best.1)
    }
}

/// Exact Euclidean distance from each foreground pixel to the nearest
/// background pixel, where everything outside the raster counts as background.
/// Background pixels get 0.
///
/// Separable lower-envelope transform (Felzenszwalb & Huttenlocher) on a grid
/// padded by one background pixel on every side.
pub fn boundary_distance(mask: &BinaryMask) -> DistanceMap {
    let dims = mask.dims();
    let (ph, pw) = (dims.height + 2, dims.width + 2);
    let inf = ((ph * ph + pw * pw) as f64) * 4.0;
    let mut grid = vec![0.0f64; ph * pw];
    for (y, x) in mask.foreground() {
        grid[(y + 1) * pw + x + 1] = inf;
    }

    let mut scratch = Scratch::new(ph.max(pw));
    let mut column = vec![0.0; ph];
    for x in 0..pw {
        for y in 0..ph {
            column[y] = grid[y * pw + x];
        }
        scratch.transform(&mut column);
        for y in 0..ph {
            grid[y * pw + x] = column[y];
        }
    }
    for y in 0..ph {
        scratch.transform(&mut grid[y * pw..(y + 1) * pw]);
    }

    let mut data = Vec::with_capacity(dims.len());
    for y in 0..dims.height {
        let row = (y + 1) * pw + 1;
        data.extend(grid[row..row + dims.width].iter().map(|v| v.sqrt()));
    }
    DistanceMap { dims, data }
}

struct Scratch {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
            out: vec![0.0; n],
        }
    }

    /// In-place 1D squared-distance transform of a sampled function.
    fn transform(&mut self, f: &mut [f64]) {
        let n = f.len();
        let v = &mut self.vertices;
        let z = &mut self.bounds;
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..n {
            let fq = f[q] + (q * q) as f64;
            let mut s;
            loop {
                let p = v[k];
                s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                // z[0] is -inf, so k never underflows
                if s <= z[k] {
                    k -= 1;
                } else {
                    break;
                }
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        let mut j = 0usize;
        for q in 0..n {
            while z[j + 1] < q as f64 {
                j += 1;
            }
            let d = q as f64 - v[j] as f64;
            self.out[q] = d * d + f[v[j]];
        }
        f.copy_from_slice(&self.out[..n]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(mask: &BinaryMask) -> Vec<f64> {
        let d = mask.dims();
        let (h, w) = (d.height as i64, d.width as i64);
        let mut out = vec![0.0; d.len()];
        for y in 0..h {
            for x in 0..w {
                if !mask.get(y as usize, x as usize) {
                    continue;
                }
                let mut best = i64::MAX;
                for by in -1..=h {
                    for bx in -1..=w {
                        let outside = by < 0 || bx < 0 || by >= h || bx >= w;
                        if outside || !mask.get(by as usize, bx as usize) {
                            best = best.min((by - y).pow(2) + (bx - x).pow(2));
                        }
                    }
                }
                out[(y * w + x) as usize] = (best as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn empty_and_single_pixel() {
        let d = Dims::new(5, 6);
        assert!(boundary_distance(&BinaryMask::new(d))
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        let one = BinaryMask::from_fn(d, |y, x| (y, x) == (2, 3));
        let dm = boundary_distance(&one);
        assert_eq!(dm.get(2, 3), 1.0);
    }

    #[test]
    fn centered_square_peaks_at_three() {
        let m = BinaryMask::from_fn(Dims::new(9, 9), |y, x| {
            (2..7).contains(&y) && (2..7).contains(&x)
        });
        let dm = boundary_distance(&m);
        assert_eq!(dm.argmax(), (4, 4, 3.0));
    }

    #[test]
    fn border_counts_as_background() {
        let m = BinaryMask::filled(Dims::new(3, 7), true);
        let dm = boundary_distance(&m);
        assert_eq!(dm.get(0, 3), 1.0);
        assert_eq!(dm.get(1, 3), 2.0);
    }

    #[test]
    fn matches_brute_force_on_patterns() {
        for seed in 0..20u64 {
            let d = Dims::new(7 + (seed as usize % 9), 5 + (seed as usize % 13));
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let m = BinaryMask::from_fn(d, |_, _| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 33) % 4 != 0
            });
            let expect = brute(&m);
            let got = boundary_distance(&m);
            for (a, b) in got.as_slice().iter().zip(&expect) {
                assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
            }
        }
    }
}
