use super::{Dims, RasterError, Rect};

/// Three-channel image with components in `[0, 1]`, row-major, interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    dims: Dims,
    data: Vec<[f32; 3]>,
}

impl RgbImage {
    pub fn filled(dims: Dims, color: [f32; 3]) -> Self {
        assert!(!dims.is_empty(), "image dims must be nonzero, got {dims}");
        Self {
            dims,
            data: vec![color; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<[f32; 3]>) -> Result<Self, RasterError> {
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

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for y in 0..dims.height {
            for x in 0..dims.width {
                data.push(f(y, x));
            }
        }
        Self::from_vec(dims, data).expect("image dims must be nonzero")
    }

    /// From 8-bit interleaved RGB bytes.
    pub fn from_rgb8(dims: Dims, bytes: &[u8]) -> Result<Self, RasterError> {
        if bytes.len() != dims.len() * 3 {
            return Err(RasterError::BufferLength {
                expected: dims.len() * 3,
                actual: bytes.len(),
            });
        }
        let data = bytes
            .chunks_exact(3)
            .map(|p| [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0])
            .collect();
        Self::from_vec(dims, data)
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|p| p.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[[f32; 3]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [f32; 3] {
        self.data[y * self.dims.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        self.data[y * self.dims.width + x] = rgb;
    }

    /// One channel as a row-major plane.
    pub fn plane(&self, channel: usize) -> Vec<f32> {
        self.data.iter().map(|p| p[channel]).collect()
    }

    /// Reassemble from three row-major planes.
    pub fn from_planes(dims: Dims, r: &[f32], g: &[f32], b: &[f32]) -> Result<Self, RasterError> {
        for plane in [r, g, b] {
            if plane.len() != dims.len() {
                return Err(RasterError::BufferLength {
                    expected: dims.len(),
                    actual: plane.len(),
                });
            }
        }
        let data = (0..dims.len()).map(|i| [r[i], g[i], b[i]]).collect();
        Self::from_vec(dims, data)
    }

    pub fn crop(&self, rect: Rect) -> RgbImage {
        assert!(rect.within(self.dims), "crop {rect} outside {}", self.dims);
        let dims = rect.dims();
        let mut out = Vec::with_capacity(dims.len());
        for y in rect.y1..rect.y2 {
            let row = y * self.dims.width;
            out.extend_from_slice(&self.data[row + rect.x1..row + rect.x2]);
        }
        RgbImage { dims, data: out }
    }

    pub fn flip_horizontal(&self) -> RgbImage {
        let w = self.dims.width;
        RgbImage::from_fn(self.dims, |y, x| self.data[y * w + (w - 1 - x)])
    }

    pub fn flip_vertical(&self) -> RgbImage {
        let (h, w) = (self.dims.height, self.dims.width);
        RgbImage::from_fn(self.dims, |y, x| self.data[(h - 1 - y) * w + x])
    }
}
