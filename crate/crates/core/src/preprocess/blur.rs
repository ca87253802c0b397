use super::{PreprocessConfig, PreprocessError};
use crate::raster::{GrayImage, Image};

/// Normalized 1-D Gaussian of half-width `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>, PreprocessError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PreprocessError::Sigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

fn convolve_rows(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let sx = (x as isize + j as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * row[sx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for (j, kv) in k.iter().enumerate() {
            let sy = (y as isize + j as isize - r).clamp(0, h as isize - 1) as usize;
            let src_row = &src[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    out
}

/// Separable Gaussian blur with edge replication. Intermediate sums stay in
/// `f64`; only the final result is rounded.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage, PreprocessError> {
    let k = gaussian_kernel(sigma)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let src: Vec<f64> = img.as_raw().iter().map(|&v| f64::from(v)).collect();
    let tmp = convolve_rows(&src, w, h, &k);
    let out = convolve_cols(&tmp, w, h, &k);
    let data = out
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(GrayImage::new(img.width(), img.height(), data).expect("same dimensions"))
}

/// Per-channel `in + amount * (in - blur(in))`, only where the detail
/// magnitude exceeds `sharpen_threshold`.
pub fn unsharp_mask(img: &Image, cfg: &PreprocessConfig) -> Result<Image, PreprocessError> {
    if cfg.sharpen_amount == 0.0 {
        return Ok(img.clone());
    }
    let mut planes = img.channels();
    for plane in planes.iter_mut() {
        let blurred = gaussian_blur(plane, cfg.sharpen_sigma)?;
        for (v, &b) in plane.as_raw_mut().iter_mut().zip(blurred.as_raw()) {
            let detail = f64::from(*v) - f64::from(b);
            if detail.abs() > cfg.sharpen_threshold {
                *v = (f64::from(*v) + cfg.sharpen_amount * detail)
                    .round()
                    .clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(Image::from_channels(&planes))
}
