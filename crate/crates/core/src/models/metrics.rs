use serde::{Deserialize, Serialize};

use crate::data::LabelVector;

use super::ModelError;

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when the denominator was zero and the value was set to 0.
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
    pub confusion: ConfusionMatrix,
}

pub fn confusion(yhat: &[u8], y: &LabelVector) -> Result<ConfusionMatrix, ModelError> {
    if yhat.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            rows: yhat.len(),
            labels: y.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in yhat.iter().zip(y.as_slice()) {
        match (p != 0, t != 0) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Accuracy, precision, recall and F1. An empty matrix yields accuracy 0.
pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let ratio = |num: usize, den: usize| if den == 0 { (0.0, false) } else { (num as f64 / den as f64, true) };
    let (accuracy, _) = ratio(cm.tp + cm.tn, cm.total());
    let (precision, precision_defined) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, recall_defined) = ratio(cm.tp, cm.tp + cm.fn_);
    let (f1, f1_defined) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), true)
    } else {
        (0.0, false)
    };
    MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        precision_defined,
        recall_defined,
        f1_defined,
        confusion: *cm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: usize, tn: usize, fp: usize, fn_: usize) -> ConfusionMatrix {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    #[test]
    fn perfect_positives() {
        let y = LabelVector::new(vec![1; 5]).unwrap();
        assert_eq!(confusion(&[1; 5], &y).unwrap(), cm(5, 0, 0, 0));
    }

    #[test]
    fn length_mismatch() {
        let y = LabelVector::new(vec![1, 0]).unwrap();
        assert!(matches!(confusion(&[1], &y), Err(ModelError::LengthMismatch { .. })));
    }

    // published values carry four decimals, so compare at that resolution
    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-4
    }

    #[test]
    fn published_rows() {
        let lr = metrics(&cm(17, 57, 1, 2));
        assert!(close(lr.accuracy, 0.9611));
        assert!(close(lr.precision, 0.9444));
        assert!(close(lr.recall, 0.8947));
        assert!(close(lr.f1, 0.9189));
        let svm = metrics(&cm(17, 56, 2, 2));
        assert!(close(svm.accuracy, 0.9481));
        assert!(close(svm.precision, 0.8947));
        assert!(close(svm.recall, 0.8947));
        assert!(close(svm.f1, 0.8947));
        let best = metrics(&cm(18, 58, 0, 1));
        assert!(close(best.accuracy, 0.9870));
        assert_eq!(best.precision, 1.0);
        assert!(close(best.recall, 0.9474));
    }

    #[test]
    fn no_positives_flags_precision() {
        let m = metrics(&cm(0, 10, 0, 0));
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 0.0);
        assert!(!m.precision_defined && !m.recall_defined && !m.f1_defined);
    }

    #[test]
    fn serializes_fn_key() {
        let json = serde_json::to_value(cm(1, 2, 3, 4)).unwrap();
        assert_eq!(json["fn"], 4);
    }

    proptest! {
        #[test]
        fn identities_hold(tp in 0usize..200, tn in 0usize..200, fp in 0usize..200, fn_ in 0usize..200) {
            prop_assume!(tp + tn + fp + fn_ > 0);
            let m = metrics(&cm(tp, tn, fp, fn_));
            let n = (tp + tn + fp + fn_) as f64;
            prop_assert!((m.accuracy - (tp + tn) as f64 / n).abs() < 1e-12);
            if m.f1_defined {
                let harmonic = 2.0 / (1.0 / m.precision + 1.0 / m.recall);
                prop_assert!((m.f1 - harmonic).abs() < 1e-12);
            }
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
