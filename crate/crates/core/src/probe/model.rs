use std::fmt::Write as _;

use super::ProbeError;
use crate::dataset::Label;

pub const CLASSES: usize = 2;

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self { features, label }
    }
}

/// Two-class softmax layer over a fixed-length feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbeModel {
    dim: usize,
    /// Row-major `CLASSES x dim`.
    weights: Vec<f64>,
    bias: [f64; CLASSES],
}

/// Gradient with respect to every model parameter, in the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: [f64; CLASSES],
}

impl Gradient {
    fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; CLASSES * dim],
            bias: [0.0; CLASSES],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(self.bias.iter()).copied()
    }
}

impl LinearProbeModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            weights: vec![0.0; CLASSES * dim],
            bias: [0.0; CLASSES],
        }
    }

    pub fn from_parts(
        dim: usize,
        weights: Vec<f64>,
        bias: [f64; CLASSES],
    ) -> Result<Self, ProbeError> {
        if weights.len() != CLASSES * dim {
            return Err(ProbeError::Dimension {
                expected: CLASSES * dim,
                actual: weights.len(),
            });
        }
        let model = Self { dim, weights, bias };
        model.check_finite()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; CLASSES] {
        self.bias
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + CLASSES
    }

    fn param_mut(&mut self, i: usize) -> &mut f64 {
        if i < self.weights.len() {
            &mut self.weights[i]
        } else {
            &mut self.bias[i - self.weights.len()]
        }
    }

    fn check_finite(&self) -> Result<(), ProbeError> {
        if self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(ProbeError::NonFinite)
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ProbeError> {
        if x.len() != self.dim {
            return Err(ProbeError::Dimension {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> [f64; CLASSES] {
        let mut z = self.bias;
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.weights[k * self.dim..(k + 1) * self.dim];
            *zk += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }

    pub(super) fn step(&mut self, grad: &Gradient, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= lr * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
    }

    /// Text form: dimensions, then one line per class of weights, then the
    /// bias line. Values carry 17 significant digits so they read back
    /// exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "linear-probe").unwrap();
        writeln!(s, "classes {CLASSES}").unwrap();
        writeln!(s, "features {}", self.dim).unwrap();
        for k in 0..CLASSES {
            let row: Vec<String> = self.weights[k * self.dim..(k + 1) * self.dim]
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(s, "weights {}", row.join(" ")).unwrap();
        }
        writeln!(s, "bias {:.16e} {:.16e}", self.bias[0], self.bias[1]).unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ProbeError> {
        let bad = |line: usize, what: &str| ProbeError::ModelFormat {
            line,
            what: what.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<(usize, Vec<String>), ProbeError> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| bad(0, &format!("missing `{key}`")))?;
            let mut toks = l.split_whitespace();
            if toks.next() != Some(key) {
                return Err(bad(i + 1, &format!("expected `{key}`")));
            }
            Ok((i + 1, toks.map(str::to_string).collect()))
        };
        let floats = |line: usize, toks: &[String]| -> Result<Vec<f64>, ProbeError> {
            toks.iter()
                .map(|t| t.parse::<f64>().map_err(|_| bad(line, "invalid number")))
                .collect()
        };
        next("linear-probe")?;
        let (i, c) = next("classes")?;
        if c != [CLASSES.to_string()] {
            return Err(bad(i, "only two classes are supported"));
        }
        let (i, d) = next("features")?;
        let dim: usize = d
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(i, "invalid feature count"))?;
        let mut weights = Vec::with_capacity(CLASSES * dim);
        for _ in 0..CLASSES {
            let (i, toks) = next("weights")?;
            if toks.len() != dim {
                return Err(bad(i, "weight row length differs from feature count"));
            }
            weights.extend(floats(i, &toks)?);
        }
        let (i, toks) = next("bias")?;
        let b = floats(i, &toks)?;
        if b.len() != CLASSES {
            return Err(bad(i, "expected two bias values"));
        }
        Self::from_parts(dim, weights, [b[0], b[1]])
    }
}

/// Class probabilities `(benign, malignant)` of `softmax(Wx + b)`.
pub fn softmax_predict(model: &LinearProbeModel, x: &[f64]) -> Result<[f64; CLASSES], ProbeError> {
    model.check_finite()?;
    model.check_dim(x)?;
    Ok(softmax(model.logits(x)))
}

pub fn softmax(z: [f64; CLASSES]) -> [f64; CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// `-ln p[label]` with the probability clamped below at `1e-12`.
pub fn cross_entropy(p: &[f64; CLASSES], label: Label) -> f64 {
    -p[label.index()].max(1e-12).ln()
}

/// Mean cross-entropy over a batch.
pub fn mean_loss(model: &LinearProbeModel, batch: &[&Example]) -> f64 {
    batch
        .iter()
        .map(|e| cross_entropy(&softmax(model.logits(&e.features)), e.label))
        .sum::<f64>()
        / batch.len() as f64
}

/// Analytic gradient of the mean cross-entropy: `(p - onehot) x^T`.
pub fn analytic_gradient(model: &LinearProbeModel, batch: &[&Example]) -> Gradient {
    let mut g = Gradient::zeros(model.dim);
    for e in batch {
        let p = softmax(model.logits(&e.features));
        for k in 0..CLASSES {
            let delta = p[k] - if e.label.index() == k { 1.0 } else { 0.0 };
            g.bias[k] += delta;
            let row = &mut g.weights[k * model.dim..(k + 1) * model.dim];
            for (gw, x) in row.iter_mut().zip(&e.features) {
                *gw += delta * x;
            }
        }
    }
    let n = batch.len() as f64;
    g.weights.iter_mut().for_each(|v| *v /= n);
    g.bias.iter_mut().for_each(|v| *v /= n);
    g
}

/// Central finite differences of the mean cross-entropy with step `h`.
pub fn numeric_gradient(model: &LinearProbeModel, batch: &[&Example], h: f64) -> Gradient {
    let mut g = Gradient::zeros(model.dim);
    let mut probe = model.clone();
    for i in 0..model.parameter_count() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + h;
        let up = mean_loss(&probe, batch);
        *probe.param_mut(i) = orig - h;
        let down = mean_loss(&probe, batch);
        *probe.param_mut(i) = orig;
        let d = (up - down) / (2.0 * h);
        if i < g.weights.len() {
            g.weights[i] = d;
        } else {
            g.bias[i - g.weights.len()] = d;
        }
    }
    g
}

pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Below this magnitude both gradients count as zero when forming the
/// relative error.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Largest `|a - n| / max(|a|, |n|, floor)` over all parameters, comparing
/// the analytic gradient with central differences at `h = 1e-5`.
pub fn gradient_check(model: &LinearProbeModel, batch: &[&Example]) -> Result<f64, ProbeError> {
    if batch.is_empty() {
        return Err(ProbeError::EmptyTrainingSet);
    }
    for e in batch {
        model.check_dim(&e.features)?;
    }
    let a = analytic_gradient(model, batch);
    let n = numeric_gradient(model, batch, GRAD_CHECK_STEP);
    Ok(a.iter()
        .zip(n.iter())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(GRAD_CHECK_FLOOR))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearProbeModel::zeros(4);
        assert_eq!(
            softmax_predict(&m, &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            [0.5, 0.5]
        );
    }

    #[test]
    fn softmax_examples() {
        let p = softmax([3f64.ln(), 0.0]);
        assert!((p[0] - 0.75).abs() < 1e-15);
        assert!((p[1] - 0.25).abs() < 1e-15);
        let q = softmax([3f64.ln() + 1000.0, 1000.0]);
        assert!((q[0] - 0.75).abs() < 1e-12);
        let r = softmax([800.0, -800.0]);
        assert!(r.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[0.0, 1.0], Label::Malignant), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], Label::Benign) - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[0.25, 0.75], Label::Benign) - 4f64.ln()).abs() < 1e-15);
        // clamped at 1e-12
        assert!((cross_entropy(&[0.0, 1.0], Label::Benign) - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn non_finite_and_dimension_errors() {
        let m = LinearProbeModel::zeros(2);
        assert!(matches!(
            softmax_predict(&m, &[1.0]),
            Err(ProbeError::Dimension { .. })
        ));
        assert!(matches!(
            LinearProbeModel::from_parts(1, vec![f64::NAN, 0.0], [0.0; 2]),
            Err(ProbeError::NonFinite)
        ));
    }

    #[test]
    fn symmetric_batch_has_zero_gradient() {
        let x = vec![0.3, 0.9, 0.1];
        let a = Example::new(x.clone(), Label::Benign);
        let b = Example::new(x, Label::Malignant);
        let batch = [&a, &b];
        let m = LinearProbeModel::zeros(3);
        let ga = analytic_gradient(&m, &batch);
        let gn = numeric_gradient(&m, &batch, GRAD_CHECK_STEP);
        assert!(ga.iter().all(|v| v.abs() < 1e-8));
        assert!(gn.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn duplicating_batch_keeps_mean_gradient() {
        let a = Example::new(vec![0.2, -0.4], Label::Benign);
        let b = Example::new(vec![0.7, 0.1], Label::Malignant);
        let m = LinearProbeModel::from_parts(2, vec![0.1, -0.3, 0.5, 0.2], [0.05, -0.02]).unwrap();
        let g1 = analytic_gradient(&m, &[&a, &b]);
        let g2 = analytic_gradient(&m, &[&a, &b, &a, &b]);
        for (x, y) in g1.iter().zip(g2.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let w: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let m = LinearProbeModel::from_parts(5, w, [1.0 / 3.0, -2e-17]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("linear-probe\nclasses 2\nfeatures 5\nweights "));
        assert_eq!(LinearProbeModel::from_text(&text).unwrap(), m);
        assert!(matches!(
            LinearProbeModel::from_text("linear-probe\nclasses 3\n"),
            Err(ProbeError::ModelFormat { line: 2, .. })
        ));
    }
}
