//! Seeded generator of hairy-lesion images with known ground truth.
//!
//! Each sample holds the hair-free image, the same image with dark curved
//! hairs painted over it, and the exact set of painted pixels. Skin is a
//! smooth low-frequency shading, the lesion is a darker ellipse with a soft
//! raised-cosine rim, and hairs are quadratic Bezier strokes 1.5 to 2.5 px
//! wide. Both images then go through the same mild Gaussian optical blur
//! (sigma 0.5 by default), so hair edges are not perfectly hard.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::preprocess::{gaussian_blur, HairMask};
use crate::raster::Image;

#[derive(Debug, Clone)]
pub struct HairyLesion {
    pub clean: Image,
    pub hairy: Image,
    pub hair: HairMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub width: u32,
    pub height: u32,
    pub hairs: std::ops::RangeInclusive<usize>,
    pub hair_length: std::ops::Range<f64>,
    pub hair_width: std::ops::Range<f64>,
    /// Gaussian optical blur applied to both images after composition.
    /// `None` keeps hard hair edges.
    pub psf_sigma: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 224,
            height: 224,
            hairs: 4..=8,
            hair_length: 60.0..180.0,
            hair_width: 1.5..2.5,
            psf_sigma: Some(0.5),
        }
    }
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    // raised cosine
    0.5 - 0.5 * (std::f64::consts::PI * t).cos()
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Paints a stroke along `points` into `mask`.
fn stroke(mask: &mut HairMask, points: &[(f64, f64)], half_width: f64) {
    let (w, h) = mask.dimensions();
    for seg in points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let x0 = (a.0.min(b.0) - half_width).floor().max(0.0) as i64;
        let x1 = (a.0.max(b.0) + half_width).ceil().min(f64::from(w) - 1.0) as i64;
        let y0 = (a.1.min(b.1) - half_width).floor().max(0.0) as i64;
        let y1 = (a.1.max(b.1) + half_width).ceil().min(f64::from(h) - 1.0) as i64;
        for y in y0..=y1 {
            for x in x0..=x1 {
                if segment_distance((x as f64, y as f64), a, b) <= half_width {
                    mask.set(x as u32, y as u32, true);
                }
            }
        }
    }
}

fn optics(img: &Image, sigma: f64) -> Image {
    let planes = img
        .channels()
        .map(|p| gaussian_blur(&p, sigma).expect("positive sigma"));
    Image::from_channels(&planes)
}

pub fn generate(seed: u64, cfg: &SynthConfig) -> HairyLesion {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (w, h) = (cfg.width, cfg.height);
    let (fw, fh) = (f64::from(w), f64::from(h));

    let skin = [
        rng.random_range(185.0..220.0),
        rng.random_range(140.0..170.0),
        rng.random_range(115.0..145.0),
    ];
    let lesion = [
        rng.random_range(95.0..140.0),
        rng.random_range(60.0..95.0),
        rng.random_range(45.0..75.0),
    ];
    let shade_amp = rng.random_range(4.0..10.0);
    let (kx, ky) = (rng.random_range(0.01..0.03), rng.random_range(0.01..0.03));
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let (cx, cy) = (
        fw * rng.random_range(0.4..0.6),
        fh * rng.random_range(0.4..0.6),
    );
    let scale = fw.min(fh);
    let (rx, ry) = (
        scale * rng.random_range(0.16..0.26),
        scale * rng.random_range(0.16..0.26),
    );
    let rim = scale * 0.05;

    let clean = Image::from_fn(w, h, |x, y| {
        let (x, y) = (f64::from(x), f64::from(y));
        let shade = shade_amp * ((kx * x + phase).sin() + (ky * y - phase).cos()) / 2.0;
        let r = (((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2)).sqrt();
        // 1 inside the lesion, 0 outside, cosine blend across the rim
        let inside = 1.0 - smoothstep(1.0 - rim / rx.min(ry), 1.0 + rim / rx.min(ry), r);
        let mut px = [0u8; 3];
        for c in 0..3 {
            px[c] = to_u8(skin[c] + shade + inside * (lesion[c] - skin[c]));
        }
        px
    });

    let mut hair = HairMask::empty(w, h);
    let n_hairs = rng.random_range(cfg.hairs.clone());
    for _ in 0..n_hairs {
        let len = rng.random_range(cfg.hair_length.clone());
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let (mx, my) = (rng.random_range(0.0..fw), rng.random_range(0.0..fh));
        let (dx, dy) = (angle.cos() * len / 2.0, angle.sin() * len / 2.0);
        let p0 = (mx - dx, my - dy);
        let p2 = (mx + dx, my + dy);
        let bend = rng.random_range(-0.25..0.25) * len;
        let p1 = (mx - angle.sin() * bend, my + angle.cos() * bend);
        let steps = (len / 2.0).ceil() as usize;
        let points: Vec<(f64, f64)> = (0..=steps)
            .map(|i| {
                let t = i as f64 / steps as f64;
                let u = 1.0 - t;
                (
                    u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0,
                    u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1,
                )
            })
            .collect();
        let half_width = rng.random_range(cfg.hair_width.clone()) / 2.0;
        stroke(&mut hair, &points, half_width);
    }

    let hair_color = [
        rng.random_range(25.0..50.0),
        rng.random_range(18.0..40.0),
        rng.random_range(15.0..35.0),
    ];
    let mut hairy = clean.clone();
    for y in 0..h {
        for x in 0..w {
            if hair.get(x, y) {
                hairy.set_pixel(x, y, hair_color.map(to_u8));
            }
        }
    }
    let (clean, hairy) = match cfg.psf_sigma {
        Some(sigma) => (optics(&clean, sigma), optics(&hairy, sigma)),
        None => (clean, hairy),
    };
    HairyLesion { clean, hairy, hair }
}

/// `(recall, precision)` of `detected` against `truth`.
pub fn mask_scores(detected: &HairMask, truth: &HairMask) -> (f64, f64) {
    let mut hit = 0usize;
    for (&d, &t) in detected.bits().iter().zip(truth.bits()) {
        if d && t {
            hit += 1;
        }
    }
    let recall = if truth.count() == 0 {
        1.0
    } else {
        hit as f64 / truth.count() as f64
    };
    let precision = if detected.count() == 0 {
        1.0
    } else {
        hit as f64 / detected.count() as f64
    };
    (recall, precision)
}
