//! Hair identification, mask cleaning and replacement.

use std::collections::VecDeque;

use super::morphology::{close_line, Orientation};
use super::{PreprocessConfig, PreprocessError};
use crate::raster::{GrayImage, Image};

/// Per-pixel hair flags, row-major, same size as the source image.
#[derive(Clone, PartialEq, Eq)]
pub struct HairMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for HairMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "HairMask({}x{}, {} set)",
            self.width,
            self.height,
            self.count()
        )
    }
}

impl HairMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            bits,
        })
    }

    /// Nonzero samples are hair.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            bits: img.as_raw().iter().map(|&v| v != 0).collect(),
        }
    }

    /// 255 for hair, 0 elsewhere.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, data).expect("mask dimensions are valid")
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn at(&self, x: i32, y: i32) -> Option<bool> {
        (x >= 0 && y >= 0 && x < self.width as i32 && y < self.height as i32)
            .then(|| self.bits[y as usize * self.width as usize + x as usize])
    }
}

fn check_dims(img: &Image, mask: &HairMask) -> Result<(), PreprocessError> {
    if img.dimensions() != mask.dimensions() {
        return Err(PreprocessError::DimensionMismatch {
            image: img.dimensions(),
            mask: mask.dimensions(),
        });
    }
    Ok(())
}

/// Marks pixels where some channel is darkened by more than
/// `hair_threshold` relative to its closing along some orientation.
pub fn detect_hair_mask(img: &Image, cfg: &PreprocessConfig) -> Result<HairMask, PreprocessError> {
    let mut response = vec![0u8; img.pixel_count()];
    for plane in img.channels() {
        for o in Orientation::ALL {
            let closed = close_line(&plane, cfg.se_length, o)?;
            for ((r, &c), &v) in response.iter_mut().zip(closed.as_raw()).zip(plane.as_raw()) {
                *r = (*r).max(c - v);
            }
        }
    }
    let bits = response.iter().map(|&d| d > cfg.hair_threshold).collect();
    Ok(HairMask {
        width: img.width(),
        height: img.height(),
        bits,
    })
}

/// Keeps 8-connected components that are long (`max(bbox w, bbox h) >=
/// min_component_span`) and thin (`area / bbox area <= max_thinness`).
pub fn filter_components(mask: &HairMask, cfg: &PreprocessConfig) -> HairMask {
    let (w, h) = (mask.width as i32, mask.height as i32);
    let mut out = HairMask::empty(mask.width, mask.height);
    let mut seen = vec![false; mask.bits.len()];
    let mut queue = VecDeque::new();
    let mut component = Vec::new();
    for start in 0..mask.bits.len() {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        component.clear();
        let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let (x, y) = ((i as i32) % w, (i as i32) / w);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            for ny in (y - 1).max(0)..=(y + 1).min(h - 1) {
                for nx in (x - 1).max(0)..=(x + 1).min(w - 1) {
                    let j = (ny * w + nx) as usize;
                    if mask.bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        let (bw, bh) = ((x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32);
        let thinness = component.len() as f64 / (f64::from(bw) * f64::from(bh));
        if bw.max(bh) >= cfg.min_component_span && thinness <= cfg.max_thinness {
            for &i in &component {
                out.bits[i] = true;
            }
        }
    }
    out
}

/// Dilation by a 3x3 square.
pub fn dilate_mask(mask: &HairMask) -> HairMask {
    let (w, h) = (mask.width as i32, mask.height as i32);
    let mut out = HairMask::empty(mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            let hit = (-1..=1).any(|dy| (-1..=1).any(|dx| mask.at(x + dx, y + dy) == Some(true)));
            out.bits[(y * w + x) as usize] = hit;
        }
    }
    out
}

/// Component filter followed by a one-pixel dilation.
pub fn clean_mask(mask: &HairMask, cfg: &PreprocessConfig) -> HairMask {
    dilate_mask(&filter_components(mask, cfg))
}

/// Number of consecutive masked pixels from `(x, y)` stepping by `(dx, dy)`,
/// not counting the start.
fn run_extent(mask: &HairMask, x: i32, y: i32, dx: i32, dy: i32) -> i32 {
    let mut n = 0;
    while mask.at(x + (n + 1) * dx, y + (n + 1) * dy) == Some(true) {
        n += 1;
    }
    n
}

/// Finds the interpolation endpoint `margin` steps past the run end,
/// moving further out past any other masked pixels, or falling back to the
/// nearest unmasked pixel closer in when the border is reached first.
fn endpoint(
    mask: &HairMask,
    x: i32,
    y: i32,
    dx: i32,
    dy: i32,
    run: i32,
    margin: i32,
) -> Option<i32> {
    let first = run + margin.max(1);
    let mut t = first;
    loop {
        match mask.at(x + t * dx, y + t * dy) {
            Some(false) => return Some(t),
            Some(true) => t += 1,
            None => break,
        }
    }
    (run + 1..first)
        .rev()
        .find(|&t| mask.at(x + t * dx, y + t * dy) == Some(false))
}

/// `(one_sided, run_length, forward_end, backward_end, step)` per orientation.
type Candidate = (bool, i32, Option<i32>, Option<i32>, (i32, i32));

/// Replaces every masked pixel by linear interpolation between unmasked
/// pixels on either side of its shortest masked run.
pub fn inpaint_hair(
    img: &Image,
    mask: &HairMask,
    cfg: &PreprocessConfig,
) -> Result<Image, PreprocessError> {
    check_dims(img, mask)?;
    let mut out = img.clone();
    let margin = cfg.interp_margin as i32;
    for y in 0..img.height() as i32 {
        for x in 0..img.width() as i32 {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            // Shortest run first, but runs with an endpoint on both sides
            // win over runs cut off by the image border.
            let mut runs: Vec<Candidate> = Orientation::ALL
                .iter()
                .map(|&o| {
                    let (dx, dy) = o.step();
                    let fwd = run_extent(mask, x, y, dx, dy);
                    let back = run_extent(mask, x, y, -dx, -dy);
                    let a = endpoint(mask, x, y, dx, dy, fwd, margin);
                    let b = endpoint(mask, x, y, -dx, -dy, back, margin);
                    (
                        !(a.is_some() && b.is_some()),
                        fwd + back + 1,
                        a,
                        b,
                        (dx, dy),
                    )
                })
                .collect();
            runs.sort_by_key(|r| (r.0, r.1));
            for &(_, _, a, b, (dx, dy)) in &runs {
                let value = match (a, b) {
                    (Some(ta), Some(tb)) => {
                        let pa = img.pixel((x + ta * dx) as u32, (y + ta * dy) as u32);
                        let pb = img.pixel((x - tb * dx) as u32, (y - tb * dy) as u32);
                        // weight each side by the distance to the other one
                        let wa = f64::from(tb) / f64::from(ta + tb);
                        let mut px = [0u8; 3];
                        for c in 0..3 {
                            let v = wa * f64::from(pa[c]) + (1.0 - wa) * f64::from(pb[c]);
                            px[c] = v.round().clamp(0.0, 255.0) as u8;
                        }
                        px
                    }
                    (Some(ta), None) => img.pixel((x + ta * dx) as u32, (y + ta * dy) as u32),
                    (None, Some(tb)) => img.pixel((x - tb * dx) as u32, (y - tb * dy) as u32),
                    (None, None) => continue,
                };
                out.set_pixel(x as u32, y as u32, value);
                break;
            }
        }
    }
    Ok(out)
}

/// Median filter over a `median_window` square, clipped at the border,
/// evaluated only at masked pixels. Even-sized clipped windows take the
/// upper median.
pub fn smooth_inpainted(
    img: &Image,
    mask: &HairMask,
    cfg: &PreprocessConfig,
) -> Result<Image, PreprocessError> {
    check_dims(img, mask)?;
    let mut out = img.clone();
    let r = (cfg.median_window / 2) as i32;
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut window: [Vec<u8>; 3] = Default::default();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            window.iter_mut().for_each(Vec::clear);
            for sy in (y - r).max(0)..=(y + r).min(h - 1) {
                for sx in (x - r).max(0)..=(x + r).min(w - 1) {
                    let p = img.pixel(sx as u32, sy as u32);
                    for c in 0..3 {
                        window[c].push(p[c]);
                    }
                }
            }
            let mut px = [0u8; 3];
            for c in 0..3 {
                let mid = window[c].len() / 2;
                px[c] = *window[c].select_nth_unstable(mid).1;
            }
            out.set_pixel(x as u32, y as u32, px);
        }
    }
    Ok(out)
}
