//! Binary frames exchanged with an out-of-process predictor.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! request  = magic:u32 version:u32 height:u32 width:u32 n_planes:u32
//!            then n_planes row-major f32 planes: R, G, B, positive, negative, prev
//! response = magic:u32 version:u32 status:u32 height:u32 width:u32
//!            then one f32 plane when status == 0
//! ```
//!
//! Frames are self-delimiting: the header fixes the payload length, so a
//! 6-plane 512×512 request is exactly `20 + 6·512·512·4` bytes on the wire.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::PredictorInput;
use crate::clicks::ClickChannels;
use crate::raster::{BinaryMask, Dims, ProbMask, RgbImage};

pub const MAGIC: u32 = 0x434C_5052;
pub const VERSION: u32 = 1;
pub const REQUEST_PLANES: u32 = 6;
pub const HEADER_LEN: usize = 20;
pub const STATUS_OK: u32 = 0;

/// Largest side accepted off the wire.
pub const MAX_SIDE: u32 = 16_384;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("bad magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported protocol version {0}")]
    BadVersion(u32),
    #[error("request must carry {REQUEST_PLANES} planes, got {0}")]
    BadPlaneCount(u32),
    #[error("frame dims {height}x{width} out of range")]
    BadDims { height: u32, width: u32 },
    #[error("frame truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
    #[error("response dims {got} do not match request {expected}")]
    DimsMismatch { expected: Dims, got: Dims },
    #[error("predictor reported status {0}")]
    Status(u32),
    #[error("response plane holds a value outside [0, 1] at index {0}")]
    ValueRange(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestFrame {
    pub height: u32,
    pub width: u32,
    /// `REQUEST_PLANES` planes of `height * width` values each.
    pub planes: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFrame {
    pub status: u32,
    pub height: u32,
    pub width: u32,
    pub plane: Option<Vec<f32>>,
}

impl RequestFrame {
    pub fn from_input(input: &PredictorInput) -> Self {
        let d = input.dims();
        let planes = vec![
            input.image.plane(0),
            input.image.plane(1),
            input.image.plane(2),
            input.clicks.positive.to_f32(),
            input.clicks.negative.to_f32(),
            input.prev_mask.to_f32(),
        ];
        Self {
            height: d.height as u32,
            width: d.width as u32,
            planes,
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.height as usize, self.width as usize)
    }

    /// Rebuild a predictor input; click and mask planes are read as `> 0.5`.
    pub fn to_input(&self) -> Result<PredictorInput, ProtocolError> {
        let d = self.dims();
        let binary = |p: &[f32]| {
            BinaryMask::from_vec(d, p.iter().map(|&v| v > 0.5).collect())
                .map_err(|_| ProtocolError::BadDims {
                    height: self.height,
                    width: self.width,
                })
        };
        let image = RgbImage::from_planes(d, &self.planes[0], &self.planes[1], &self.planes[2])
            .map_err(|_| ProtocolError::BadDims {
                height: self.height,
                width: self.width,
            })?;
        let clicks = ClickChannels::from_planes(binary(&self.planes[3])?, binary(&self.planes[4])?);
        Ok(PredictorInput {
            image,
            clicks,
            prev_mask: binary(&self.planes[5])?,
        })
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.planes.len() * self.height as usize * self.width as usize * 4
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        for v in [MAGIC, VERSION, self.height, self.width, self.planes.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for plane in &self.planes {
            put_plane(&mut out, plane);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut cursor = bytes;
        let frame = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(ProtocolError::Trailing(cursor.len()));
        }
        Ok(frame)
    }

    pub fn read_from(reader: &mut impl Read) -> Result<Self, ProtocolError> {
        let header = read_header(reader)?;
        check_magic(header[0], header[1])?;
        let (height, width, n_planes) = (header[2], header[3], header[4]);
        check_dims(height, width)?;
        if n_planes != REQUEST_PLANES {
            return Err(ProtocolError::BadPlaneCount(n_planes));
        }
        let n = height as usize * width as usize;
        let planes = (0..n_planes)
            .map(|_| read_plane(reader, n))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            height,
            width,
            planes,
        })
    }

    pub fn write_to(&self, writer: &mut impl Write) -> io::Result<()> {
        writer.write_all(&self.encode())?;
        writer.flush()
    }
}

impl ResponseFrame {
    pub fn ok(mask: &ProbMask) -> Self {
        let d = mask.dims();
        Self {
            status: STATUS_OK,
            height: d.height as u32,
            width: d.width as u32,
            plane: Some(mask.as_slice().to_vec()),
        }
    }

    pub fn error(status: u32, dims: Dims) -> Self {
        assert_ne!(status, STATUS_OK, "error frames need a nonzero status");
        Self {
            status,
            height: dims.height as u32,
            width: dims.width as u32,
            plane: None,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.plane.as_ref().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(HEADER_LEN + n * 4);
        for v in [MAGIC, VERSION, self.status, self.height, self.width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(plane) = &self.plane {
            put_plane(&mut out, plane);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut cursor = bytes;
        let frame = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(ProtocolError::Trailing(cursor.len()));
        }
        Ok(frame)
    }

    pub fn read_from(reader: &mut impl Read) -> Result<Self, ProtocolError> {
        let header = read_header(reader)?;
        check_magic(header[0], header[1])?;
        let (status, height, width) = (header[2], header[3], header[4]);
        check_dims(height, width)?;
        let plane = if status == STATUS_OK {
            Some(read_plane(reader, height as usize * width as usize)?)
        } else {
            None
        };
        Ok(Self {
            status,
            height,
            width,
            plane,
        })
    }

    pub fn write_to(&self, writer: &mut impl Write) -> io::Result<()> {
        writer.write_all(&self.encode())?;
        writer.flush()
    }

    /// Validate against the request dims and convert to a probability mask.
    pub fn into_prob(self, expected: Dims) -> Result<ProbMask, ProtocolError> {
        if self.status != STATUS_OK {
            return Err(ProtocolError::Status(self.status));
        }
        let got = Dims::new(self.height as usize, self.width as usize);
        if got != expected {
            return Err(ProtocolError::DimsMismatch { expected, got });
        }
        let plane = self.plane.unwrap_or_default();
        if plane.len() != got.len() {
            return Err(ProtocolError::Truncated {
                expected: got.len(),
                actual: plane.len(),
            });
        }
        if let Some(i) = plane.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(ProtocolError::ValueRange(i));
        }
        Ok(ProbMask::from_vec(got, plane).expect("length and range checked"))
    }
}

fn put_plane(out: &mut Vec<u8>, plane: &[f32]) {
    for v in plane {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_header(reader: &mut impl Read) -> Result<[u32; 5], ProtocolError> {
    let mut buf = [0u8; HEADER_LEN];
    read_exact(reader, &mut buf)?;
    let mut header = [0u32; 5];
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        header[i] = u32::from_le_bytes(chunk.try_into().expect("chunk of 4"));
    }
    Ok(header)
}

fn read_plane(reader: &mut impl Read, n: usize) -> Result<Vec<f32>, ProtocolError> {
    let mut buf = vec![0u8; n * 4];
    read_exact(reader, &mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect())
}

fn read_exact(reader: &mut impl Read, buf: &mut [u8]) -> Result<(), ProtocolError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(ProtocolError::Truncated {
                    expected: buf.len(),
                    actual: filled,
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn check_magic(magic: u32, version: u32) -> Result<(), ProtocolError> {
    if magic != MAGIC {
        return Err(ProtocolError::BadMagic(magic));
    }
    if version != VERSION {
        return Err(ProtocolError::BadVersion(version));
    }
    Ok(())
}

fn check_dims(height: u32, width: u32) -> Result<(), ProtocolError> {
    if height == 0 || width == 0 || height > MAX_SIDE || width > MAX_SIDE {
        return Err(ProtocolError::BadDims { height, width });
    }
    Ok(())
}

/// Serve request frames from `stream` until the peer disconnects, answering
/// each with `handler`. Handler errors are sent back as status frames.
pub fn serve_connection<S, F>(mut stream: S, mut handler: F) -> Result<(), ProtocolError>
where
    S: Read + Write,
    F: FnMut(&PredictorInput) -> Result<ProbMask, u32>,
{
    loop {
        let request = match RequestFrame::read_from(&mut stream) {
            Ok(r) => r,
            Err(ProtocolError::Truncated { actual: 0, .. }) => return Ok(()),
            Err(e) => return Err(e),
        };
        let response = match request.to_input().map_err(|_| 2).and_then(|i| handler(&i)) {
            Ok(mask) => ResponseFrame::ok(&mask),
            Err(status) => ResponseFrame::error(status.max(1), request.dims()),
        };
        response.write_to(&mut stream)?;
    }
}
