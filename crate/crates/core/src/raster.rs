//! Raster types, binary netpbm (P5/P6) I/O and luma conversion.
//!
//! Only maxval-255 files are supported. The encoder always writes the
//! canonical header `P6 <w> <h> 255\n` (or `P5 ...`) so that
//! `encode(decode(f)) == f` for every canonical file.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("buffer holds {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("byte {offset}: expected magic `P5` or `P6`")]
    BadMagic { offset: usize },
    #[error("byte {offset}: malformed header ({what})")]
    BadHeader { offset: usize, what: &'static str },
    #[error("byte {offset}: maxval {value} is not supported (only 255)")]
    Maxval { offset: usize, value: u64 },
    #[error("byte {offset}: payload truncated, expected {expected} bytes, found {actual}")]
    Truncated {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("expected a {expected} netpbm file")]
    WrongKind { expected: &'static str },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn check_dims(width: u32, height: u32) -> Result<usize, RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension { width, height });
    }
    Ok(width as usize * height as usize)
}

/// 8-bit RGB raster, row-major, channels interleaved.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)? * 3;
        if data.len() != expected {
            return Err(RasterError::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = check_dims(width, height).expect("non-empty raster");
        let data = rgb.iter().copied().cycle().take(n * 3).collect();
        Self {
            width,
            height,
            data,
        }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let n = check_dims(width, height).expect("non-empty raster");
        let mut data = Vec::with_capacity(n * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Interleaved `r, g, b` samples.
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    /// Extracts channel `c` (0 = red, 1 = green, 2 = blue).
    pub fn channel(&self, c: usize) -> GrayImage {
        assert!(c < 3, "channel index out of range");
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(3).copied().collect(),
        }
    }

    pub fn channels(&self) -> [GrayImage; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    /// # Panics
    /// If the three planes do not share dimensions.
    pub fn from_channels(planes: &[GrayImage; 3]) -> Self {
        let (w, h) = planes[0].dimensions();
        assert!(
            planes.iter().all(|p| p.dimensions() == (w, h)),
            "channel planes differ in size"
        );
        let mut data = Vec::with_capacity(planes[0].data.len() * 3);
        for i in 0..planes[0].data.len() {
            data.extend(planes.iter().map(|p| p.data[i]));
        }
        Self {
            width: w,
            height: h,
            data,
        }
    }
}

/// 8-bit single-channel raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)?;
        if data.len() != expected {
            return Err(RasterError::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        let n = check_dims(width, height).expect("non-empty raster");
        Self {
            width,
            height,
            data: vec![value; n],
        }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let n = check_dims(width, height).expect("non-empty raster");
        let mut data = Vec::with_capacity(n);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }
}

/// A decoded netpbm file: either colour (P6) or gray (P5).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Raster {
    Rgb(Image),
    Gray(GrayImage),
}

impl Raster {
    pub fn into_rgb(self) -> Result<Image, RasterError> {
        match self {
            Raster::Rgb(img) => Ok(img),
            Raster::Gray(_) => Err(RasterError::WrongKind { expected: "P6" }),
        }
    }

    pub fn into_gray(self) -> Result<GrayImage, RasterError> {
        match self {
            Raster::Gray(img) => Ok(img),
            Raster::Rgb(_) => Err(RasterError::WrongKind { expected: "P5" }),
        }
    }
}

impl From<Image> for Raster {
    fn from(img: Image) -> Self {
        Raster::Rgb(img)
    }
}

impl From<GrayImage> for Raster {
    fn from(img: GrayImage) -> Self {
        Raster::Gray(img)
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    /// Skips whitespace and `#` comments; requires at least one separator.
    fn separator(&mut self) -> Result<(), RasterError> {
        let start = self.pos;
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                RasterError::Truncated {
                    offset: self.pos,
                    expected: 1,
                    actual: 0,
                }
            } else {
                RasterError::BadHeader {
                    offset: self.pos,
                    what: "expected whitespace",
                }
            });
        }
        Ok(())
    }

    fn number(&mut self) -> Result<(u64, usize), RasterError> {
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or(RasterError::BadHeader {
                    offset: start,
                    what: "number overflows",
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                RasterError::Truncated {
                    offset: self.pos,
                    expected: 1,
                    actual: 0,
                }
            } else {
                RasterError::BadHeader {
                    offset: start,
                    what: "expected decimal number",
                }
            });
        }
        Ok((value, start))
    }
}

/// Decodes a binary P5 or P6 stream with maxval 255.
pub fn decode_netpbm(bytes: &[u8]) -> Result<Raster, RasterError> {
    let color = match bytes.get(..2) {
        Some(b"P6") => true,
        Some(b"P5") => false,
        _ => return Err(RasterError::BadMagic { offset: 0 }),
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    rd.separator()?;
    let (w, w_off) = rd.number()?;
    rd.separator()?;
    let (h, h_off) = rd.number()?;
    rd.separator()?;
    let (maxval, m_off) = rd.number()?;
    if maxval != 255 {
        return Err(RasterError::Maxval {
            offset: m_off,
            value: maxval,
        });
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(rd.pos) {
        Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
        Some(_) => {
            return Err(RasterError::BadHeader {
                offset: rd.pos,
                what: "expected whitespace after maxval",
            })
        }
        None => {
            return Err(RasterError::Truncated {
                offset: rd.pos,
                expected: 1,
                actual: 0,
            })
        }
    }
    let width = u32::try_from(w).map_err(|_| RasterError::BadHeader {
        offset: w_off,
        what: "width too large",
    })?;
    let height = u32::try_from(h).map_err(|_| RasterError::BadHeader {
        offset: h_off,
        what: "height too large",
    })?;
    if width == 0 || height == 0 {
        return Err(RasterError::BadHeader {
            offset: if width == 0 { w_off } else { h_off },
            what: "zero dimension",
        });
    }
    let channels = if color { 3 } else { 1 };
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(RasterError::BadHeader {
            offset: w_off,
            what: "dimensions overflow",
        })?;
    let payload = &bytes[rd.pos..];
    if payload.len() < expected {
        return Err(RasterError::Truncated {
            offset: rd.pos,
            expected,
            actual: payload.len(),
        });
    }
    let data = payload[..expected].to_vec();
    Ok(if color {
        Raster::Rgb(Image::new(width, height, data)?)
    } else {
        Raster::Gray(GrayImage::new(width, height, data)?)
    })
}

fn encode(magic: &str, width: u32, height: u32, payload: &[u8]) -> Vec<u8> {
    let header = format!("{magic} {width} {height} 255\n");
    let mut out = Vec::with_capacity(header.len() + payload.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(payload);
    out
}

/// Canonical encoding: `P6 <w> <h> 255\n` or `P5 ...` followed by raw samples.
pub fn encode_netpbm(raster: &Raster) -> Vec<u8> {
    match raster {
        Raster::Rgb(img) => encode_ppm(img),
        Raster::Gray(img) => encode_pgm(img),
    }
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    encode("P6", img.width, img.height, &img.data)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    encode("P5", img.width, img.height, &img.data)
}

pub fn read_netpbm(path: impl AsRef<Path>) -> Result<Raster, RasterError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_netpbm(&bytes)
}

pub fn write_netpbm(path: impl AsRef<Path>, raster: &Raster) -> Result<(), RasterError> {
    let path = path.as_ref();
    std::fs::write(path, encode_netpbm(raster)).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// BT.601 luma, `round(0.299 r + 0.587 g + 0.114 b)` with halves rounded up.
pub fn luma(rgb: [u8; 3]) -> u8 {
    // integer form of the weights avoids platform-dependent float rounding
    let sum = 299 * u32::from(rgb[0]) + 587 * u32::from(rgb[1]) + 114 * u32::from(rgb[2]);
    ((sum + 500) / 1000).min(255) as u8
}

pub fn to_grayscale(img: &Image) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img
            .data
            .chunks_exact(3)
            .map(|p| luma([p[0], p[1], p[2]]))
            .collect(),
    }
}
