//! Sharpening and hair removal.
//!
//! The pipeline runs in a fixed order: unsharp masking, then hair
//! detection by oriented grayscale closing, mask cleaning, directional
//! interpolation over the mask and a median pass restricted to the mask.

mod blur;
mod hair;
mod morphology;

pub use blur::{gaussian_blur, gaussian_kernel, unsharp_mask};
pub use hair::{
    clean_mask, detect_hair_mask, dilate_mask, filter_components, inpaint_hair, smooth_inpainted,
    HairMask,
};
pub use morphology::{close_line, dilate_line, erode_line, Orientation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::Image;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("gaussian sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("structuring element length must be odd and >= 3, got {0}")]
    SeLength(usize),
    #[error("invalid preprocessing config: {0}")]
    Config(String),
    #[error("mask is {mask:?} but image is {image:?}")]
    DimensionMismatch { image: (u32, u32), mask: (u32, u32) },
}

/// Parameters for every preprocessing stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub sharpen: bool,
    pub remove_hair: bool,
    pub sharpen_sigma: f64,
    pub sharpen_amount: f64,
    pub sharpen_threshold: f64,
    pub se_length: usize,
    pub hair_threshold: u8,
    pub min_component_span: u32,
    pub max_thinness: f64,
    pub interp_margin: u32,
    pub median_window: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            sharpen: true,
            remove_hair: true,
            sharpen_sigma: 1.0,
            sharpen_amount: 0.8,
            sharpen_threshold: 0.0,
            se_length: 11,
            hair_threshold: 10,
            min_component_span: 15,
            max_thinness: 0.5,
            interp_margin: 2,
            median_window: 5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if !(self.sharpen_sigma.is_finite() && self.sharpen_sigma > 0.0) {
            return Err(PreprocessError::Sigma(self.sharpen_sigma));
        }
        if !(self.sharpen_amount.is_finite() && self.sharpen_amount >= 0.0) {
            return Err(PreprocessError::Config(format!(
                "sharpen_amount must be >= 0, got {}",
                self.sharpen_amount
            )));
        }
        if !(self.sharpen_threshold.is_finite() && self.sharpen_threshold >= 0.0) {
            return Err(PreprocessError::Config(format!(
                "sharpen_threshold must be >= 0, got {}",
                self.sharpen_threshold
            )));
        }
        if self.se_length < 3 || self.se_length.is_multiple_of(2) {
            return Err(PreprocessError::SeLength(self.se_length));
        }
        if self.median_window < 3 || self.median_window.is_multiple_of(2) {
            return Err(PreprocessError::Config(format!(
                "median_window must be odd and >= 3, got {}",
                self.median_window
            )));
        }
        if !(self.max_thinness > 0.0 && self.max_thinness <= 1.0) {
            return Err(PreprocessError::Config(format!(
                "max_thinness must lie in (0, 1], got {}",
                self.max_thinness
            )));
        }
        Ok(())
    }
}

/// Output of [`preprocess_pipeline`].
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub image: Image,
    pub mask: HairMask,
}

/// Sharpen, then detect, clean and remove hair.
///
/// Disabled stages pass their input through; with hair removal disabled
/// the returned mask is empty.
pub fn preprocess_pipeline(
    img: &Image,
    cfg: &PreprocessConfig,
) -> Result<Preprocessed, PreprocessError> {
    cfg.validate()?;
    let sharpened = if cfg.sharpen {
        unsharp_mask(img, cfg)?
    } else {
        img.clone()
    };
    if !cfg.remove_hair {
        let mask = HairMask::empty(img.width(), img.height());
        return Ok(Preprocessed {
            image: sharpened,
            mask,
        });
    }
    let mask = clean_mask(&detect_hair_mask(&sharpened, cfg)?, cfg);
    let inpainted = inpaint_hair(&sharpened, &mask, cfg)?;
    let image = smooth_inpainted(&inpainted, &mask, cfg)?;
    Ok(Preprocessed { image, mask })
}
