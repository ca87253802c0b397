//! Algebraic properties of the evaluation metrics on random logs.

use approx::assert_relative_eq;
use proptest::prelude::*;

use lesion_core::evaluation::{
    accuracy, confusion, f1, metrics_report, precision, sensitivity, specificity,
};
use lesion_core::{ConfusionMatrix, Label, PredictionRecord};

fn label(b: bool) -> Label {
    if b {
        Label::Malignant
    } else {
        Label::Benign
    }
}

fn arb_log() -> impl Strategy<Value = Vec<PredictionRecord>> {
    proptest::collection::vec((any::<bool>(), any::<bool>(), 0.5f64..=1.0), 1..60).prop_map(
        |rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (p, t, c))| PredictionRecord {
                    case_id: i.to_string(),
                    predicted: label(p),
                    confidence: c,
                    truth: label(t),
                })
                .collect()
        },
    )
}

fn recount(records: &[PredictionRecord], positive: Label) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for r in records {
        match (r.predicted == positive, r.truth == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    cm
}

proptest! {
    #[test]
    fn permutation_invariant(log in arb_log(), seed in any::<u64>()) {
        let mut shuffled = log.clone();
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(metrics_report(&log).unwrap(), metrics_report(&shuffled).unwrap());
    }

    #[test]
    fn relabel_symmetry(log in arb_log()) {
        let cm = confusion(&log).unwrap();
        prop_assert_eq!(cm, recount(&log, Label::Malignant));
        let flipped = recount(&log, Label::Benign);
        prop_assert_eq!(cm.swapped(), flipped);
        prop_assert_eq!(sensitivity(&cm), specificity(&flipped));
        prop_assert_eq!(specificity(&cm), sensitivity(&flipped));
        // precision under the flipped convention is the negative predictive value
        let npv = (cm.tn + cm.fn_ > 0).then(|| 100.0 * cm.tn as f64 / (cm.tn + cm.fn_) as f64);
        prop_assert_eq!(precision(&flipped), npv);
    }

    #[test]
    fn f1_between_precision_and_recall(p in 0.0f64..=100.0, r in 0.0f64..=100.0) {
        prop_assume!(p + r > 0.0);
        let v = f1(p, r).unwrap();
        prop_assert!(v >= p.min(r) - 1e-9 && v <= p.max(r) + 1e-9);
    }

    #[test]
    fn f1_of_equal_inputs(x in 0.001f64..=100.0) {
        assert_relative_eq!(f1(x, x).unwrap(), x, max_relative = 1e-12);
    }

    #[test]
    fn accuracy_identity(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
        let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
        prop_assume!(cm.total() > 0);
        let acc = accuracy(&cm).unwrap();
        let weighted = sensitivity(&cm).unwrap_or(0.0) * (tp + fn_) as f64
            + specificity(&cm).unwrap_or(0.0) * (tn + fp) as f64;
        assert_relative_eq!(acc, weighted / cm.total() as f64, max_relative = 1e-12);
    }
}
