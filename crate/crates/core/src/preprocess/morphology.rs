//! Flat grayscale morphology with centered line structuring elements.
//!
//! The element is clipped at the image border, which is equivalent to
//! padding with -inf for dilation and +inf for erosion. Dilation and
//! erosion stay adjoint under that rule, so closing keeps its extensivity
//! and idempotence exactly.

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::raster::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Deg0,
        Orientation::Deg45,
        Orientation::Deg90,
        Orientation::Deg135,
    ];

    /// Unit step `(dx, dy)` in image coordinates (y grows downward).
    pub fn step(self) -> (i32, i32) {
        match self {
            Orientation::Deg0 => (1, 0),
            Orientation::Deg45 => (1, -1),
            Orientation::Deg90 => (0, 1),
            Orientation::Deg135 => (1, 1),
        }
    }
}

fn check_length(length: usize) -> Result<i32, PreprocessError> {
    if length < 3 || length.is_multiple_of(2) {
        return Err(PreprocessError::SeLength(length));
    }
    Ok((length / 2) as i32)
}

fn line_filter(
    img: &GrayImage,
    length: usize,
    orientation: Orientation,
    pick: impl Fn(u8, u8) -> u8,
) -> Result<GrayImage, PreprocessError> {
    let r = check_length(length)?;
    let (w, h) = (img.width() as i32, img.height() as i32);
    let (dx, dy) = orientation.step();
    let src = img.as_raw();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = src[(y * w + x) as usize];
            for k in 1..=r {
                for s in [-k, k] {
                    let (sx, sy) = (x + s * dx, y + s * dy);
                    if sx >= 0 && sx < w && sy >= 0 && sy < h {
                        acc = pick(acc, src[(sy * w + sx) as usize]);
                    }
                }
            }
            out.push(acc);
        }
    }
    Ok(GrayImage::new(img.width(), img.height(), out).expect("same dimensions"))
}

pub fn dilate_line(
    img: &GrayImage,
    length: usize,
    orientation: Orientation,
) -> Result<GrayImage, PreprocessError> {
    line_filter(img, length, orientation, u8::max)
}

pub fn erode_line(
    img: &GrayImage,
    length: usize,
    orientation: Orientation,
) -> Result<GrayImage, PreprocessError> {
    line_filter(img, length, orientation, u8::min)
}

/// Dilation followed by erosion with the same line element.
pub fn close_line(
    img: &GrayImage,
    length: usize,
    orientation: Orientation,
) -> Result<GrayImage, PreprocessError> {
    erode_line(&dilate_line(img, length, orientation)?, length, orientation)
}
