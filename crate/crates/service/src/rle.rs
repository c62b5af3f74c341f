use clore_core::raster::{BinaryMask, Dims};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row-major run lengths, alternating background/foreground and starting
/// with background. A mask that starts with foreground has a leading 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRle {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleError {
    #[error("run lengths sum to {sum}, expected {expected}")]
    LengthMismatch { sum: u64, expected: u64 },
}

pub fn rle_encode(mask: &BinaryMask) -> MaskRle {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for &v in mask.as_slice() {
        if v != current {
            counts.push(run);
            current = v;
            run = 0;
        }
        run += 1;
    }
    counts.push(run);
    MaskRle {
        height: mask.height(),
        width: mask.width(),
        counts,
    }
}

pub fn rle_decode(rle: &MaskRle) -> Result<BinaryMask, RleError> {
    let expected = (rle.height as u64) * (rle.width as u64);
    let sum = rle
        .counts
        .iter()
        .try_fold(0u64, |acc, &c| acc.checked_add(c))
        .unwrap_or(u64::MAX);
    if sum != expected {
        return Err(RleError::LengthMismatch { sum, expected });
    }
    let mut data = Vec::with_capacity(expected as usize);
    for (i, &c) in rle.counts.iter().enumerate() {
        data.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
    }
    Ok(BinaryMask::from_vec(Dims::new(rle.height, rle.width), data).expect("length checked"))
}
