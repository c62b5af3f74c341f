use super::{check_dims, Dims, RasterError, Rect};

/// Per-pixel foreground labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    dims: Dims,
    data: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask. Panics on zero-sized dims.
    pub fn new(dims: Dims) -> Self {
        assert!(!dims.is_empty(), "mask dims must be nonzero, got {dims}");
        Self {
            dims,
            data: vec![false; dims.len()],
        }
    }

    pub fn filled(dims: Dims, value: bool) -> Self {
        let mut mask = Self::new(dims);
        mask.data.fill(value);
        mask
    }

    pub fn from_vec(dims: Dims, data: Vec<bool>) -> Result<Self, RasterError> {
        if dims.is_empty() {
            return Err(RasterError::ZeroSized(dims));
        }
        if data.len() != dims.len() {
            return Err(RasterError::BufferLength {
                expected: dims.len(),
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Self::new(dims);
        for y in 0..dims.height {
            for x in 0..dims.width {
                mask.data[y * dims.width + x] = f(y, x);
            }
        }
        mask
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.dims.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: bool) {
        let w = self.dims.width;
        self.data[y * w + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// True when no pixel is foreground.
    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Foreground pixels as `(y, x)`, in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.dims.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i / w, i % w))
    }

    /// Copy of the pixels inside `rect`. The rect must lie within the mask.
    pub fn crop(&self, rect: Rect) -> BinaryMask {
        assert!(rect.within(self.dims), "crop {rect} outside {}", self.dims);
        let dims = rect.dims();
        let mut out = Vec::with_capacity(dims.len());
        for y in rect.y1..rect.y2 {
            let row = y * self.dims.width;
            out.extend_from_slice(&self.data[row + rect.x1..row + rect.x2]);
        }
        BinaryMask { dims, data: out }
    }

    /// Overwrite the pixels of `rect` with `patch`, whose dims must equal the rect's.
    pub fn paste(&mut self, patch: &BinaryMask, rect: Rect) {
        assert!(rect.within(self.dims), "paste {rect} outside {}", self.dims);
        assert_eq!(patch.dims, rect.dims(), "patch dims must match paste rect");
        let pw = patch.dims.width;
        for (row, y) in (rect.y1..rect.y2).enumerate() {
            let dst = y * self.dims.width;
            self.data[dst + rect.x1..dst + rect.x2]
                .copy_from_slice(&patch.data[row * pw..(row + 1) * pw]);
        }
    }

    pub fn flip_horizontal(&self) -> BinaryMask {
        let w = self.dims.width;
        BinaryMask::from_fn(self.dims, |y, x| self.data[y * w + (w - 1 - x)])
    }

    pub fn flip_vertical(&self) -> BinaryMask {
        let (h, w) = (self.dims.height, self.dims.width);
        BinaryMask::from_fn(self.dims, |y, x| self.data[(h - 1 - y) * w + x])
    }

    /// Foreground as 0.0 / 1.0 values.
    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect()
    }
}

/// Pixel-wise exclusive-or of two masks of equal dims.
pub fn mask_xor(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask, RasterError> {
    check_dims(a.dims, b.dims)?;
    let data = a.data.iter().zip(&b.data).map(|(&p, &q)| p ^ q).collect();
    Ok(BinaryMask { dims: a.dims, data })
}

/// Per-pixel foreground probability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMask {
    dims: Dims,
    data: Vec<f32>,
}

impl ProbMask {
    pub fn zeros(dims: Dims) -> Self {
        Self::constant(dims, 0.0)
    }

    pub fn constant(dims: Dims, value: f32) -> Self {
        assert!(!dims.is_empty(), "mask dims must be nonzero, got {dims}");
        assert!((0.0..=1.0).contains(&value), "probability {value} outside [0, 1]");
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Validating constructor; rejects values outside `[0, 1]` (including NaN).
    pub fn from_vec(dims: Dims, data: Vec<f32>) -> Result<Self, RasterError> {
        if dims.is_empty() {
            return Err(RasterError::ZeroSized(dims));
        }
        if data.len() != dims.len() {
            return Err(RasterError::BufferLength {
                expected: dims.len(),
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(RasterError::OutOfRange { index, value });
        }
        Ok(Self { dims, data })
    }

    /// Builds without range checks; values are clamped into `[0, 1]`.
    pub fn from_vec_clamped(dims: Dims, mut data: Vec<f32>) -> Result<Self, RasterError> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::from_vec(dims, data)
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            dims: mask.dims,
            data: mask.to_f32(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.dims.width + x]
    }

    /// Foreground where the probability strictly exceeds `threshold`.
    pub fn threshold(&self, threshold: f32) -> BinaryMask {
        BinaryMask {
            dims: self.dims,
            data: self.data.iter().map(|&p| p > threshold).collect(),
        }
    }

    pub fn crop(&self, rect: Rect) -> ProbMask {
        assert!(rect.within(self.dims), "crop {rect} outside {}", self.dims);
        let dims = rect.dims();
        let mut out = Vec::with_capacity(dims.len());
        for y in rect.y1..rect.y2 {
            let row = y * self.dims.width;
            out.extend_from_slice(&self.data[row + rect.x1..row + rect.x2]);
        }
        ProbMask { dims, data: out }
    }
}
