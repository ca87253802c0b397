//! Binary classifier evaluation from prediction logs.
//!
//! The positive class is always `malignant`. Ratios whose denominator is
//! zero are reported as undefined (`None`, rendered `n/a`) rather than 0 or
//! 100.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Label;

pub const LOG_HEADER: [&str; 4] = ["case_id", "predicted", "confidence", "truth"];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("line 1: expected header `case_id,predicted,confidence,truth`")]
    Header,
    #[error("line {line}: expected 4 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: unknown label `{token}`")]
    UnknownLabel { line: u64, token: String },
    #[error("line {line}: confidence `{token}` is not a fraction in [0, 1] or a percentage")]
    Confidence { line: u64, token: String },
    #[error("case `{case_id}` appears on line {first} and line {second}")]
    DuplicateCase {
        case_id: String,
        first: u64,
        second: u64,
    },
    #[error("no prediction records")]
    Empty,
    #[error("precision and recall are both zero; F1 is undefined")]
    ZeroF1,
    #[error("malformed log: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub case_id: String,
    pub predicted: Label,
    /// Confidence of the predicted class as a fraction.
    pub confidence: f64,
    pub truth: Label,
}

fn parse_confidence(token: &str) -> Option<f64> {
    let t = token.trim();
    let v = match t.strip_suffix('%') {
        Some(pct) => pct.trim().parse::<f64>().ok()? / 100.0,
        None => t.parse::<f64>().ok()?,
    };
    (v.is_finite() && (0.0..=1.0).contains(&v)).then_some(v)
}

/// Parses a `case_id,predicted,confidence,truth` log. Confidence may be a
/// fraction (`0.984`) or a percentage (`97.8%`).
pub fn parse_prediction_log(bytes: &[u8]) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let header = rd.headers().map_err(|e| EvalError::Csv(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != LOG_HEADER {
        return Err(EvalError::Header);
    }
    let mut out = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| EvalError::Csv(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 4 {
            return Err(EvalError::FieldCount {
                line,
                found: rec.len(),
            });
        }
        let label = |token: &str| {
            token.parse::<Label>().map_err(|_| EvalError::UnknownLabel {
                line,
                token: token.to_string(),
            })
        };
        let case_id = rec[0].to_string();
        let predicted = label(&rec[1])?;
        let confidence = parse_confidence(&rec[2]).ok_or_else(|| EvalError::Confidence {
            line,
            token: rec[2].to_string(),
        })?;
        let truth = label(&rec[3])?;
        if let Some(&first) = seen.get(&case_id) {
            return Err(EvalError::DuplicateCase {
                case_id,
                first,
                second: line,
            });
        }
        seen.insert(case_id.clone(), line);
        out.push(PredictionRecord {
            case_id,
            predicted,
            confidence,
            truth,
        });
    }
    Ok(out)
}

pub fn write_prediction_log(records: &[PredictionRecord]) -> String {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(LOG_HEADER).expect("in-memory write");
    for r in records {
        wr.write_record([
            r.case_id.as_str(),
            r.predicted.as_str(),
            &format!("{:.6}", r.confidence),
            r.truth.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wr.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub const fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with benign treated as the positive class.
    pub fn swapped(&self) -> Self {
        Self::new(self.tn, self.fn_, self.fp, self.tp)
    }
}

pub fn confusion(records: &[PredictionRecord]) -> Result<ConfusionMatrix, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for r in records {
        match (r.predicted, r.truth) {
            (Label::Malignant, Label::Malignant) => cm.tp += 1,
            (Label::Malignant, Label::Benign) => cm.fp += 1,
            (Label::Benign, Label::Malignant) => cm.fn_ += 1,
            (Label::Benign, Label::Benign) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    ratio(cm.tp + cm.tn, cm.total()).ok_or(EvalError::Empty)
}

pub fn sensitivity(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fn_)
}

pub fn specificity(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tn, cm.tn + cm.fp)
}

pub fn precision(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fp)
}

/// Harmonic mean of precision and recall, both in percent.
pub fn f1(precision: f64, recall: f64) -> Result<f64, EvalError> {
    if precision + recall == 0.0 {
        return Err(EvalError::ZeroF1);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self, EvalError> {
        let sensitivity = sensitivity(cm);
        let precision = precision(cm);
        let f1 = match (precision, sensitivity) {
            (Some(p), Some(r)) => f1(p, r).ok(),
            _ => None,
        };
        Ok(Self {
            accuracy: accuracy(cm)?,
            sensitivity,
            specificity: specificity(cm),
            precision,
            f1,
        })
    }

    /// `(name, value)` rows in display order.
    pub fn rows(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("Accuracy", Some(self.accuracy)),
            ("Sensitivity", self.sensitivity),
            ("Specificity", self.specificity),
            ("Precision", self.precision),
            ("F1 Score", self.f1),
        ]
    }
}

/// Confusion matrix plus the metrics derived from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub records: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

pub fn metrics_report(records: &[PredictionRecord]) -> Result<Evaluation, EvalError> {
    let cm = confusion(records)?;
    Ok(Evaluation {
        records: records.len(),
        confusion: cm,
        metrics: MetricsReport::from_confusion(&cm)?,
    })
}

/// Percentage as text: two decimals, or a whole number when
/// `paper_rounding` is set. Both round ties to even.
pub fn format_percent(v: Option<f64>, paper_rounding: bool) -> String {
    match v {
        None => "n/a".to_string(),
        Some(v) if paper_rounding => format!("{v:.0}%"),
        Some(v) => format!("{v:.2}%"),
    }
}

impl Evaluation {
    pub fn render_text(&self, paper_rounding: bool) -> String {
        let mut s = String::new();
        let cm = &self.confusion;
        writeln!(s, "records      {}", self.records).unwrap();
        writeln!(s, "positive     malignant").unwrap();
        writeln!(s, "tp {}  fp {}  fn {}  tn {}", cm.tp, cm.fp, cm.fn_, cm.tn).unwrap();
        writeln!(s).unwrap();
        for (name, v) in self.metrics.rows() {
            writeln!(s, "{name:<12} {}", format_percent(v, paper_rounding)).unwrap();
        }
        s
    }
}
