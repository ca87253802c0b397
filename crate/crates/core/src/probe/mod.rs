//! Frozen feature extractor plus a trainable two-class softmax layer.

mod features;
mod model;
mod train;

pub use features::{extract_features, FEATURE_DIM, HIST_BINS};
pub use model::{
    analytic_gradient, cross_entropy, gradient_check, mean_loss, numeric_gradient, softmax,
    softmax_predict, Example, Gradient, LinearProbeModel, CLASSES, GRAD_CHECK_FLOOR,
    GRAD_CHECK_STEP,
};
pub use train::{evaluate, train_probe, CurvePoint, TrainConfig, TrainingCurve, CURVE_HEADER};

use thiserror::Error;

use crate::dataset::Label;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature dimension {actual} does not match {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("model contains non-finite values")]
    NonFinite,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model file line {line}: {what}")]
    ModelFormat { line: usize, what: String },
    #[error("curve file: {0}")]
    Curve(String),
}

/// Winning class and its probability.
pub fn predict_label(
    model: &LinearProbeModel,
    features: &[f64],
) -> Result<(Label, f64), ProbeError> {
    let p = softmax_predict(model, features)?;
    Ok(if p[1] > p[0] {
        (Label::Malignant, p[1])
    } else {
        (Label::Benign, p[0])
    })
}
