use super::{check_dims, BinaryMask, RasterError};

/// Pixel counts behind the overlap metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    pub a: usize,
    pub b: usize,
    pub intersection: usize,
}

impl OverlapCounts {
    pub fn union(&self) -> usize {
        self.a + self.b - self.intersection
    }

    /// `|a ∩ b| / |a ∪ b|`, 1.0 when both are empty.
    pub fn iou(&self) -> f64 {
        match self.union() {
            0 => 1.0,
            u => self.intersection as f64 / u as f64,
        }
    }

    /// `2|a ∩ b| / (|a| + |b|)`, 1.0 when both are empty.
    pub fn dice(&self) -> f64 {
        match self.a + self.b {
            0 => 1.0,
            s => 2.0 * self.intersection as f64 / s as f64,
        }
    }
}

pub fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<OverlapCounts, RasterError> {
    check_dims(a.dims(), b.dims())?;
    let mut counts = OverlapCounts {
        a: 0,
        b: 0,
        intersection: 0,
    };
    for (&p, &q) in a.as_slice().iter().zip(b.as_slice()) {
        counts.a += p as usize;
        counts.b += q as usize;
        counts.intersection += (p && q) as usize;
    }
    Ok(counts)
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, RasterError> {
    Ok(overlap_counts(a, b)?.iou())
}

pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64, RasterError> {
    Ok(overlap_counts(a, b)?.dice())
}
