//! Fixed 55-value descriptor used as the frozen feature extractor.
//!
//! Layout: three 16-bin normalized histograms (red, green, blue), then
//! per-channel mean and population standard deviation divided by 255, then
//! the mean Sobel gradient magnitude of the luma plane divided by
//! `1020 * sqrt(2)`.

use crate::raster::{to_grayscale, Image};

pub const FEATURE_DIM: usize = 55;
pub const HIST_BINS: usize = 16;

const SOBEL_SCALE: f64 = 1020.0 * std::f64::consts::SQRT_2;

fn mean_sobel_magnitude(img: &Image) -> f64 {
    let gray = to_grayscale(img);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let at =
        |x: i64, y: i64| f64::from(gray.get(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32));
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            total += (gx * gx + gy * gy).sqrt();
        }
    }
    total / (w * h) as f64
}

pub fn extract_features(img: &Image) -> Vec<f64> {
    let n = img.pixel_count() as f64;
    let mut hist = [[0u64; HIST_BINS]; 3];
    let mut sum = [0u64; 3];
    let mut sum_sq = [0u64; 3];
    for px in img.as_raw().chunks_exact(3) {
        for c in 0..3 {
            let v = u64::from(px[c]);
            hist[c][(px[c] / 16) as usize] += 1;
            sum[c] += v;
            sum_sq[c] += v * v;
        }
    }
    let mut out = Vec::with_capacity(FEATURE_DIM);
    for h in &hist {
        out.extend(h.iter().map(|&k| k as f64 / n));
    }
    for c in 0..3 {
        let mean = sum[c] as f64 / n;
        let var = (sum_sq[c] as f64 / n - mean * mean).max(0.0);
        out.push(mean / 255.0);
        out.push(var.sqrt() / 255.0);
    }
    out.push((mean_sobel_magnitude(img) / SOBEL_SCALE).min(1.0));
    debug_assert_eq!(out.len(), FEATURE_DIM);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_image() {
        let f = extract_features(&Image::filled(8, 8, [0, 0, 0]));
        assert_eq!(f.len(), FEATURE_DIM);
        assert_eq!(f[0], 1.0);
        assert!(f[1..16].iter().all(|&v| v == 0.0));
        assert!(f[48..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mid_gray_image() {
        let f = extract_features(&Image::filled(5, 3, [128, 128, 128]));
        for c in 0..3 {
            assert_eq!(f[c * 16 + 8], 1.0);
            assert!((f[48 + 2 * c] - 128.0 / 255.0).abs() < 1e-12);
            assert_eq!(f[49 + 2 * c], 0.0);
        }
        assert_eq!(f[54], 0.0);
    }

    #[test]
    fn black_white_pair() {
        let img = Image::new(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        let f = extract_features(&img);
        for c in 0..3 {
            assert_eq!(f[c * 16], 0.5);
            assert_eq!(f[c * 16 + 15], 0.5);
            assert_eq!(f[48 + 2 * c], 0.5);
            assert_eq!(f[49 + 2 * c], 0.5);
        }
        // With replicated borders both pixels see gx = 4 * 255 and gy = 0,
        // so the mean magnitude is 1020 and the scaled value 1/sqrt(2).
        assert!((f[54] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn histograms_are_normalized() {
        let img = Image::from_fn(17, 11, |x, y| {
            [(x * 15) as u8, (y * 23) as u8, ((x * y) % 256) as u8]
        });
        let f = extract_features(&img);
        for c in 0..3 {
            let s: f64 = f[c * 16..(c + 1) * 16].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!(f.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }
}
