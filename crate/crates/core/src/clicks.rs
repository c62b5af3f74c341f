//! User clicks and their disk encoding into predictor input planes.

use serde::{Deserialize, Serialize};

use crate::raster::{connected_components, BinaryMask, Connectivity, Dims, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn from_foreground(foreground: bool) -> Self {
        if foreground {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

/// One interaction, in full-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Click {
    pub y: usize,
    pub x: usize,
    pub polarity: Polarity,
    /// 1-based position in the session's click sequence.
    pub index: u32,
}

impl Click {
    pub fn new(y: usize, x: usize, polarity: Polarity, index: u32) -> Self {
        Self {
            y,
            x,
            polarity,
            index,
        }
    }

    pub fn positive(y: usize, x: usize, index: u32) -> Self {
        Self::new(y, x, Polarity::Positive, index)
    }

    pub fn negative(y: usize, x: usize, index: u32) -> Self {
        Self::new(y, x, Polarity::Negative, index)
    }
}

/// Maps full-image coordinates into a resampled patch: `roi` in the image is
/// stretched onto a raster of `dims`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchTransform {
    pub roi: Rect,
    pub dims: Dims,
}

impl PatchTransform {
    pub fn new(roi: Rect, dims: Dims) -> Self {
        Self { roi, dims }
    }

    pub fn identity(dims: Dims) -> Self {
        Self::new(dims.full_rect(), dims)
    }

    /// Continuous patch coordinates of the center of image pixel `(y, x)`.
    pub fn map(&self, y: usize, x: usize) -> (f64, f64) {
        let sy = self.dims.height as f64 / self.roi.height() as f64;
        let sx = self.dims.width as f64 / self.roi.width() as f64;
        (
            (y as f64 + 0.5 - self.roi.y1 as f64) * sy - 0.5,
            (x as f64 + 0.5 - self.roi.x1 as f64) * sx - 0.5,
        )
    }
}

/// A click center after mapping into patch space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickCenter {
    pub y: f64,
    pub x: f64,
    pub polarity: Polarity,
}

/// Polarity-split disk rasters for one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickChannels {
    pub positive: BinaryMask,
    pub negative: BinaryMask,
    /// Mapped centers of the encoded clicks, in input order.
    pub centers: Vec<ClickCenter>,
}

impl ClickChannels {
    pub fn empty(dims: Dims) -> Self {
        Self {
            positive: BinaryMask::new(dims),
            negative: BinaryMask::new(dims),
            centers: Vec::new(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.positive.dims()
    }

    /// Rebuild from bare disk planes (e.g. off the wire), recovering one center
    /// per connected disk as its centroid. Overlapping disks merge into one center.
    pub fn from_planes(positive: BinaryMask, negative: BinaryMask) -> Self {
        let mut centers = Vec::new();
        for (plane, polarity) in [(&positive, Polarity::Positive), (&negative, Polarity::Negative)] {
            for c in connected_components(plane, Connectivity::Four) {
                let n = c.area() as f64;
                let (sy, sx) = c
                    .pixels()
                    .iter()
                    .fold((0.0, 0.0), |(a, b), &(y, x)| (a + y as f64, b + x as f64));
                centers.push(ClickCenter {
                    y: sy / n,
                    x: sx / n,
                    polarity,
                });
            }
        }
        Self {
            positive,
            negative,
            centers,
        }
    }
}

/// Rasterize clicks as filled disks of `radius` (patch pixels) around their
/// mapped centers. Clicks outside `transform.roi` are dropped.
pub fn encode_clicks(clicks: &[Click], radius: f64, transform: &PatchTransform) -> ClickChannels {
    encode(clicks, radius, transform, true)
}

/// As [`encode_clicks`] but keeping clicks outside the ROI: their centers
/// are reported in patch space and any part of their disk that falls inside
/// the patch is drawn.
pub fn encode_clicks_unclipped(
    clicks: &[Click],
    radius: f64,
    transform: &PatchTransform,
) -> ClickChannels {
    encode(clicks, radius, transform, false)
}

fn encode(clicks: &[Click], radius: f64, transform: &PatchTransform, drop_outside: bool) -> ClickChannels {
    let dims = transform.dims;
    let mut channels = ClickChannels::empty(dims);
    let r2 = radius * radius;
    for click in clicks {
        if drop_outside && !transform.roi.contains(click.y, click.x) {
            continue;
        }
        let (cy, cx) = transform.map(click.y, click.x);
        let plane = match click.polarity {
            Polarity::Positive => &mut channels.positive,
            Polarity::Negative => &mut channels.negative,
        };
        let y_lo = (cy - radius).ceil().max(0.0) as i64;
        let y_hi = ((cy + radius).floor() as i64).min(dims.height as i64 - 1);
        let x_lo = (cx - radius).ceil().max(0.0) as i64;
        let x_hi = ((cx + radius).floor() as i64).min(dims.width as i64 - 1);
        for y in y_lo..=y_hi {
            let dy = y as f64 - cy;
            for x in x_lo..=x_hi {
                let dx = x as f64 - cx;
                if dy * dy + dx * dx <= r2 {
                    plane.set(y as usize, x as usize, true);
                }
            }
        }
        channels.centers.push(ClickCenter {
            y: cy,
            x: cx,
            polarity: click.polarity,
        });
    }
    channels
}
