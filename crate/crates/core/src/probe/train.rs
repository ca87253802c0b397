use std::io;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::model::{analytic_gradient, cross_entropy, softmax, Example, LinearProbeModel};
use super::ProbeError;

/// Mini-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub eval_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            batch_size: 32,
            iterations: 5000,
            eval_interval: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ProbeError::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.iterations == 0 || self.eval_interval == 0 {
            return Err(ProbeError::Config(
                "batch_size, iterations and eval_interval must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub train_cross_entropy: f64,
    pub val_cross_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingCurve {
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: [&str; 5] = ["iter", "train_acc", "val_acc", "train_xent", "val_xent"];

impl TrainingCurve {
    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    /// Comma-separated table; missing validation values are left empty.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(CURVE_HEADER)?;
        for p in &self.points {
            wr.write_record([
                p.iteration.to_string(),
                format!("{:.6}", p.train_accuracy),
                opt(p.val_accuracy),
                format!("{:.6}", p.train_cross_entropy),
                opt(p.val_cross_entropy),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, ProbeError> {
        let mut rd = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| ProbeError::Curve(e.to_string()))?;
            let field = |k: usize| -> Result<Option<f64>, ProbeError> {
                let s = rec.get(k).unwrap_or("").trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| ProbeError::Curve(format!("row {}: bad value `{s}`", i + 2)))
            };
            let need = |k: usize| {
                field(k)?
                    .ok_or_else(|| ProbeError::Curve(format!("row {}: missing column {k}", i + 2)))
            };
            points.push(CurvePoint {
                iteration: need(0)? as usize,
                train_accuracy: need(1)?,
                val_accuracy: field(2)?,
                train_cross_entropy: need(3)?,
                val_cross_entropy: field(4)?,
            });
        }
        Ok(Self { points })
    }
}

/// Accuracy and mean cross-entropy of `model` on `set`.
pub fn evaluate(model: &LinearProbeModel, set: &[Example]) -> (f64, f64) {
    let mut correct = 0usize;
    let mut loss = 0.0;
    for e in set {
        let p = softmax(model.logits(&e.features));
        let predicted = if p[1] > p[0] { 1 } else { 0 };
        if predicted == e.label.index() {
            correct += 1;
        }
        loss += cross_entropy(&p, e.label);
    }
    let n = set.len() as f64;
    (correct as f64 / n, loss / n)
}

/// Fisher-Yates over `0..n`, same bounded draw as the dataset splitter.
fn shuffled(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = ((u128::from(rng.next_u64()) * (i + 1) as u128) >> 64) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Trains a zero-initialized softmax layer by mini-batch gradient descent.
///
/// Batches are consecutive slices of a per-epoch permutation; when an
/// epoch runs out mid-batch the batch continues into the next reshuffled
/// epoch. The batch size is capped at the training set size, so a batch
/// size at least as large as the set gives full-batch descent. The curve is
/// sampled every `eval_interval` steps and after the last step.
pub fn train_probe(
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
) -> Result<(LinearProbeModel, TrainingCurve), ProbeError> {
    cfg.validate()?;
    let dim = train
        .first()
        .ok_or(ProbeError::EmptyTrainingSet)?
        .features
        .len();
    for e in train.iter().chain(val) {
        if e.features.len() != dim {
            return Err(ProbeError::Dimension {
                expected: dim,
                actual: e.features.len(),
            });
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut model = LinearProbeModel::zeros(dim);
    let mut curve = TrainingCurve::default();
    let batch_size = cfg.batch_size.min(train.len());
    let mut order = shuffled(&mut rng, train.len());
    let mut cursor = 0;
    let mut batch: Vec<&Example> = Vec::with_capacity(batch_size);
    for it in 1..=cfg.iterations {
        batch.clear();
        while batch.len() < batch_size {
            if cursor == order.len() {
                order = shuffled(&mut rng, train.len());
                cursor = 0;
            }
            batch.push(&train[order[cursor]]);
            cursor += 1;
        }
        let grad = analytic_gradient(&model, &batch);
        model.step(&grad, cfg.learning_rate);
        if !model.weights().iter().all(|v| v.is_finite()) {
            return Err(ProbeError::NonFinite);
        }
        if it % cfg.eval_interval == 0 || it == cfg.iterations {
            let (train_accuracy, train_cross_entropy) = evaluate(&model, train);
            let (val_accuracy, val_cross_entropy) = if val.is_empty() {
                (None, None)
            } else {
                let (a, l) = evaluate(&model, val);
                (Some(a), Some(l))
            };
            curve.points.push(CurvePoint {
                iteration: it,
                train_accuracy,
                val_accuracy,
                train_cross_entropy,
                val_cross_entropy,
            });
        }
    }
    Ok((model, curve))
}
