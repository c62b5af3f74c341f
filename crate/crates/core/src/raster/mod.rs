//! Mask and raster primitives shared by every stage of the click loop.
//!
//! All rasters are row-major. Rectangles are half-open: `[y1, y2) × [x1, x2)`.

mod components;
mod distance;
mod image;
mod mask;
mod metrics;
mod rect;
mod resize;

pub use components::{
    component_at, component_containing, connected_components, largest_component, Component,
    Connectivity,
};
pub use distance::{boundary_distance, DistanceMap};
pub use image::RgbImage;
pub use mask::{mask_xor, BinaryMask, ProbMask};
pub use metrics::{dice, iou, overlap_counts, OverlapCounts};
pub use rect::{bounding_box, expand_rect, Rect};
pub use resize::{resize_image, resize_mask, resize_prob};

use thiserror::Error;

/// Height and width of a raster, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub const fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub const fn len(&self) -> usize {
        self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.height == 0 || self.width == 0
    }

    /// The rectangle covering the whole raster.
    pub fn full_rect(&self) -> Rect {
        Rect::new(0, self.height, 0, self.width)
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        y < self.height && x < self.width
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: Dims, right: Dims },
    #[error("raster must have nonzero dimensions, got {0}")]
    ZeroSized(Dims),
    #[error("buffer holds {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("probability {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f32 },
}

pub(crate) fn check_dims(left: Dims, right: Dims) -> Result<(), RasterError> {
    if left == right {
        Ok(())
    } else {
        Err(RasterError::DimensionMismatch { left, right })
    }
}
