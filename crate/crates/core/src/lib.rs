//! # lesion-core
//!
//! Building blocks for a dermoscopy image pipeline:
//!
//! - [`raster`]: RGB and gray rasters with bit-exact binary netpbm I/O
//! - [`preprocess`]: unsharp masking and morphological hair removal
//! - [`quality`]: PSNR, MSE, MAXERR and L2RAT between image pairs
//! - [`dataset`]: directory scanning, seeded stratified splits, manifests
//! - [`probe`]: fixed features plus a softmax layer trained by mini-batch
//!   gradient descent
//! - [`evaluation`]: confusion matrices and accuracy, sensitivity,
//!   specificity, precision and F1 from prediction logs
//! - [`synthetic`]: seeded hairy-lesion images with ground-truth masks
//!
//! Every operation is a pure function of its inputs (and an explicit seed
//! where randomness is involved), so outputs are byte-identical across runs
//! and thread counts.

pub mod dataset;
pub mod evaluation;
pub mod preprocess;
pub mod probe;
pub mod quality;
pub mod raster;
pub mod synthetic;

pub use dataset::{Label, ManifestEntry, Split, SplitConfig};
pub use evaluation::{ConfusionMatrix, Evaluation, MetricsReport, PredictionRecord};
pub use preprocess::{HairMask, PreprocessConfig, Preprocessed};
pub use probe::{Example, LinearProbeModel, TrainConfig, TrainingCurve};
pub use quality::QualityRow;
pub use raster::{GrayImage, Image, Raster};
