//! Full-reference image quality metrics: PSNR, MSE, MAXERR and L2RAT.
//!
//! All colour channels are pooled into one sample set and the peak is 255.

use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::raster::{GrayImage, Image};

pub const PEAK: f64 = 255.0;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("image sizes differ: {reference:?} vs {test:?}")]
    DimensionMismatch {
        reference: (u32, u32, usize),
        test: (u32, u32, usize),
    },
    #[error("reference image is all zero; L2RAT is undefined")]
    ZeroReference,
    #[error("pair `{id}`: {source}")]
    Pair {
        id: String,
        #[source]
        source: Box<QualityError>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Anything that exposes interleaved 8-bit samples with a size.
pub trait Samples {
    /// `(width, height, channels)`
    fn shape(&self) -> (u32, u32, usize);
    fn samples(&self) -> &[u8];
}

impl Samples for Image {
    fn shape(&self) -> (u32, u32, usize) {
        (self.width(), self.height(), 3)
    }
    fn samples(&self) -> &[u8] {
        self.as_raw()
    }
}

impl Samples for GrayImage {
    fn shape(&self) -> (u32, u32, usize) {
        (self.width(), self.height(), 1)
    }
    fn samples(&self) -> &[u8] {
        self.as_raw()
    }
}

fn pair<'a, T: Samples + ?Sized>(
    reference: &'a T,
    test: &'a T,
) -> Result<impl Iterator<Item = (i64, i64)> + 'a, QualityError> {
    if reference.shape() != test.shape() {
        return Err(QualityError::DimensionMismatch {
            reference: reference.shape(),
            test: test.shape(),
        });
    }
    Ok(reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(&a, &b)| (i64::from(a), i64::from(b))))
}

fn sq_err_sum<T: Samples + ?Sized>(reference: &T, test: &T) -> Result<u64, QualityError> {
    Ok(pair(reference, test)?
        .map(|(a, b)| ((a - b) * (a - b)) as u64)
        .sum())
}

pub fn mse<T: Samples + ?Sized>(reference: &T, test: &T) -> Result<f64, QualityError> {
    let sum = sq_err_sum(reference, test)?;
    Ok(sum as f64 / reference.samples().len() as f64)
}

/// PSNR for a given MSE; `f64::INFINITY` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr<T: Samples + ?Sized>(reference: &T, test: &T) -> Result<f64, QualityError> {
    Ok(psnr_from_mse(mse(reference, test)?))
}

/// Largest absolute per-sample deviation.
pub fn maxerr<T: Samples + ?Sized>(reference: &T, test: &T) -> Result<u8, QualityError> {
    Ok(pair(reference, test)?
        .map(|(a, b)| (a - b).unsigned_abs() as u8)
        .max()
        .unwrap_or(0))
}

/// `sum(test^2) / sum(reference^2)`.
pub fn l2rat<T: Samples + ?Sized>(reference: &T, test: &T) -> Result<f64, QualityError> {
    let (num, den) = pair(reference, test)?.fold((0u64, 0u64), |(n, d), (a, b)| {
        (n + (b * b) as u64, d + (a * a) as u64)
    });
    if den == 0 {
        return Err(QualityError::ZeroReference);
    }
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityRow {
    pub image_id: String,
    /// `f64::INFINITY` when the images are identical.
    pub psnr: f64,
    pub mse: f64,
    pub maxerr: u8,
    pub l2rat: f64,
    pub width: u32,
    pub height: u32,
}

impl QualityRow {
    pub fn compute(
        id: impl Into<String>,
        reference: &Image,
        test: &Image,
    ) -> Result<Self, QualityError> {
        let mse = mse(reference, test)?;
        Ok(Self {
            image_id: id.into(),
            psnr: psnr_from_mse(mse),
            mse,
            maxerr: maxerr(reference, test)?,
            l2rat: l2rat(reference, test)?,
            width: reference.width(),
            height: reference.height(),
        })
    }
}

/// One row per pair, in input order. The first failing pair aborts the
/// report and is named in the error.
pub fn quality_report<'a, I>(pairs: I) -> Result<Vec<QualityRow>, QualityError>
where
    I: IntoIterator<Item = (&'a str, &'a Image, &'a Image)>,
{
    pairs
        .into_iter()
        .map(|(id, r, t)| {
            QualityRow::compute(id, r, t).map_err(|e| QualityError::Pair {
                id: id.to_string(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Means over a report; PSNR is averaged over finite rows only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitySummary {
    pub rows: usize,
    pub identical: usize,
    pub mean_psnr: Option<f64>,
    pub mean_mse: f64,
    pub mean_maxerr: f64,
    pub mean_l2rat: f64,
}

pub fn summarize(rows: &[QualityRow]) -> QualitySummary {
    let n = rows.len().max(1) as f64;
    let finite: Vec<f64> = rows
        .iter()
        .map(|r| r.psnr)
        .filter(|p| p.is_finite())
        .collect();
    QualitySummary {
        rows: rows.len(),
        identical: rows.len() - finite.len(),
        mean_psnr: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        mean_mse: rows.iter().map(|r| r.mse).sum::<f64>() / n,
        mean_maxerr: rows.iter().map(|r| f64::from(r.maxerr)).sum::<f64>() / n,
        mean_l2rat: rows.iter().map(|r| r.l2rat).sum::<f64>() / n,
    }
}

pub const REPORT_HEADER: [&str; 7] = ["id", "psnr_db", "mse", "maxerr", "l2rat", "width", "height"];

fn fixed4(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // std formatting rounds exact ties to even
        format!("{v:.4}")
    }
}

/// Writes the report as comma-separated text with a header row.
pub fn write_report<W: io::Write>(rows: &[QualityRow], out: W) -> Result<(), QualityError> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(REPORT_HEADER)?;
    for r in rows {
        wr.write_record([
            r.image_id.clone(),
            fixed4(r.psnr),
            fixed4(r.mse),
            r.maxerr.to_string(),
            fixed4(r.l2rat),
            r.width.to_string(),
            r.height.to_string(),
        ])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}
