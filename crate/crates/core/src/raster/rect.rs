use serde::{Deserialize, Serialize};

use super::{BinaryMask, Dims};

/// Half-open pixel rectangle `[y1, y2) × [x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub y1: usize,
    pub y2: usize,
    pub x1: usize,
    pub x2: usize,
}

impl Rect {
    /// Panics unless `y1 < y2` and `x1 < x2`.
    pub fn new(y1: usize, y2: usize, x1: usize, x2: usize) -> Self {
        assert!(y1 < y2 && x1 < x2, "degenerate rect ({y1},{y2},{x1},{x2})");
        Self { y1, y2, x1, x2 }
    }

    pub fn try_new(y1: usize, y2: usize, x1: usize, x2: usize) -> Option<Self> {
        (y1 < y2 && x1 < x2).then_some(Self { y1, y2, x1, x2 })
    }

    /// 1×1 rect at a pixel.
    pub fn pixel(y: usize, x: usize) -> Self {
        Self::new(y, y + 1, x, x + 1)
    }

    pub fn height(&self) -> usize {
        self.y2 - self.y1
    }

    pub fn width(&self) -> usize {
        self.x2 - self.x1
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.height(), self.width())
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.y1..self.y2).contains(&y) && (self.x1..self.x2).contains(&x)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.y1 <= other.y1 && other.y2 <= self.y2 && self.x1 <= other.x1 && other.x2 <= self.x2
    }

    /// Whether the rect fits inside a raster of the given dims.
    pub fn within(&self, dims: Dims) -> bool {
        self.y2 <= dims.height && self.x2 <= dims.width
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Rect::try_new(
            self.y1.max(other.y1),
            self.y2.min(other.y2),
            self.x1.max(other.x1),
            self.x2.min(other.x2),
        )
    }

    /// Smallest rect covering both.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            y1: self.y1.min(other.y1),
            y2: self.y2.max(other.y2),
            x1: self.x1.min(other.x1),
            x2: self.x2.max(other.x2),
        }
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.y1, self.y2, self.x1, self.x2)
    }
}

/// Tightest rect containing every foreground pixel, or `None` for a blank mask.
pub fn bounding_box(mask: &BinaryMask) -> Option<Rect> {
    let dims = mask.dims();
    let data = mask.as_slice();
    let (mut y1, mut y2, mut x1, mut x2) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..dims.height {
        let row = &data[y * dims.width..(y + 1) * dims.width];
        let Some(first) = row.iter().position(|&v| v) else {
            continue;
        };
        let last = row.iter().rposition(|&v| v).unwrap_or(first);
        y1 = y1.min(y);
        y2 = y + 1;
        x1 = x1.min(first);
        x2 = x2.max(last + 1);
    }
    Rect::try_new(y1, y2, x1, x2)
}

// Rounding slack so that e.g. 50 - 70.0000000001 still floors to -20.
const ROUND_EPS: f64 = 1e-9;

/// Scale `r` about its center by `ratio`, rounding outward, then intersect with `clip`.
///
/// An empty intersection yields the 1×1 rect inside `clip` nearest to the scaled
/// rect's center, so the result is never degenerate.
pub fn expand_rect(r: Rect, ratio: f64, clip: Rect) -> Rect {
    let (y1, y2) = scale_span(r.y1, r.y2, ratio);
    let (x1, x2) = scale_span(r.x1, r.x2, ratio);

    let iy1 = y1.max(clip.y1 as i64);
    let iy2 = y2.min(clip.y2 as i64);
    let ix1 = x1.max(clip.x1 as i64);
    let ix2 = x2.min(clip.x2 as i64);
    if iy1 < iy2 && ix1 < ix2 {
        return Rect::new(iy1 as usize, iy2 as usize, ix1 as usize, ix2 as usize);
    }

    let cy = ((y1 + y2) / 2).clamp(clip.y1 as i64, clip.y2 as i64 - 1) as usize;
    let cx = ((x1 + x2) / 2).clamp(clip.x1 as i64, clip.x2 as i64 - 1) as usize;
    Rect::pixel(cy, cx)
}

fn scale_span(lo: usize, hi: usize, ratio: f64) -> (i64, i64) {
    let center = (lo + hi) as f64 / 2.0;
    let half = (hi - lo) as f64 * ratio / 2.0;
    let a = (center - half + ROUND_EPS).floor() as i64;
    let b = (center + half - ROUND_EPS).ceil() as i64;
    // ratio < 1 can collapse a 1-pixel span
    if b <= a {
        (a, a + 1)
    } else {
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_examples() {
        let d = Dims::new(12, 12);
        let single = BinaryMask::from_fn(d, |y, x| (y, x) == (3, 7));
        assert_eq!(bounding_box(&single), Some(Rect::new(3, 4, 7, 8)));
        assert_eq!(bounding_box(&BinaryMask::new(d)), None);
        let two = BinaryMask::from_fn(d, |y, x| (y, x) == (2, 2) || (y, x) == (9, 5));
        assert_eq!(bounding_box(&two), Some(Rect::new(2, 10, 2, 6)));
    }

    #[test]
    fn expand_examples() {
        let full = Rect::new(0, 100, 0, 100);
        let r = Rect::new(10, 20, 10, 20);
        assert_eq!(expand_rect(r, 1.0, full), r);
        assert_eq!(expand_rect(r, 2.0, full), Rect::new(5, 25, 5, 25));
        assert_eq!(
            expand_rect(Rect::new(0, 10, 0, 10), 2.0, Rect::new(0, 12, 0, 12)),
            Rect::new(0, 12, 0, 12)
        );
    }

    #[test]
    fn expand_rounds_outward() {
        // center 5, half 1.5 * 1.4 = 2.1 -> [2.9, 7.1] -> [2, 8)
        let r = Rect::new(3, 6, 3, 6);
        assert_eq!(
            expand_rect(r, 1.4, Rect::new(0, 50, 0, 50)),
            Rect::new(2, 7, 2, 7)
        );
        // exact products must not pick up an extra pixel from float noise
        let r = Rect::new(0, 100, 0, 100);
        assert_eq!(
            expand_rect(r, 1.4, Rect::new(0, 1000, 0, 1000)),
            Rect::new(0, 120, 0, 120)
        );
    }

    #[test]
    fn expand_disjoint_clip_gives_nearest_pixel() {
        let r = Rect::new(0, 2, 0, 2);
        let clip = Rect::new(10, 20, 30, 40);
        assert_eq!(expand_rect(r, 1.0, clip), Rect::pixel(10, 30));
        let r = Rect::new(50, 52, 50, 52);
        assert_eq!(expand_rect(r, 1.0, clip), Rect::pixel(19, 39));
    }

    #[test]
    fn intersect_and_union() {
        let a = Rect::new(0, 5, 0, 5);
        let b = Rect::new(3, 8, 4, 9);
        assert_eq!(a.intersect(&b), Some(Rect::new(3, 5, 4, 5)));
        assert_eq!(a.union(&b), Rect::new(0, 8, 0, 9));
        assert_eq!(a.intersect(&Rect::new(5, 6, 0, 1)), None);
    }
}
