//! Evaluation metrics.
//!
//! Classification: accuracy, per-class and macro-averaged precision,
//! recall and F1, plus the confusion matrix (rows = truth, columns =
//! predicted). A 0/0 precision or recall is defined as 0. Regression:
//! RMSE and MAE.

use serde::{Deserialize, Serialize};

use crate::error::MlError;
use crate::learn::TaskKind;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<S> {
    pub task: TaskKind,
    pub n: usize,
    pub accuracy: Option<S>,
    pub per_class: Option<Vec<ClassMetrics<S>>>,
    pub macro_precision: Option<S>,
    pub macro_recall: Option<S>,
    pub macro_f1: Option<S>,
    /// confusion[truth][predicted]
    pub confusion: Option<Vec<Vec<usize>>>,
    pub rmse: Option<S>,
    pub mae: Option<S>,
}

fn zero_safe_div<S: Scalar>(num: S, den: S) -> S {
    if den == S::zero() {
        S::zero()
    } else {
        num / den
    }
}

/// Compare one output column of predictions against ground truth.
pub fn evaluate<S: Scalar>(
    predictions: &[S],
    truths: &[S],
    task: TaskKind,
) -> Result<MetricsReport<S>, MlError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(MlError::LengthMismatch {
            preds: predictions.len(),
            truths: truths.len(),
        });
    }
    let n = predictions.len();
    match task {
        TaskKind::Regression => {
            let mut sq = S::zero();
            let mut abs = S::zero();
            for (p, t) in predictions.iter().zip(truths) {
                let e = *p - *t;
                sq = sq + e * e;
                abs = abs + e.abs();
            }
            let inv_n = S::from_f64_lossy(1.0 / n as f64);
            Ok(MetricsReport {
                task,
                n,
                accuracy: None,
                per_class: None,
                macro_precision: None,
                macro_recall: None,
                macro_f1: None,
                confusion: None,
                rmse: Some((sq * inv_n).sqrt()),
                mae: Some(abs * inv_n),
            })
        }
        TaskKind::Classification => {
            let as_idx = |v: &S| v.to_f64_lossy().round().max(0.0) as usize;
            let n_classes = predictions
                .iter()
                .chain(truths)
                .map(as_idx)
                .max()
                .unwrap_or(0)
                + 1;
            let mut confusion = vec![vec![0usize; n_classes]; n_classes];
            let mut correct = 0usize;
            for (p, t) in predictions.iter().zip(truths) {
                let (pi, ti) = (as_idx(p), as_idx(t));
                confusion[ti][pi] += 1;
                if pi == ti {
                    correct += 1;
                }
            }
            let mut per_class = Vec::with_capacity(n_classes);
            for c in 0..n_classes {
                let tp = confusion[c][c];
                let fp: usize = (0..n_classes).filter(|&t| t != c).map(|t| confusion[t][c]).sum();
                let fn_: usize = (0..n_classes).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
                let support: usize = confusion[c].iter().sum();
                let precision = zero_safe_div(
                    S::from_f64_lossy(tp as f64),
                    S::from_f64_lossy((tp + fp) as f64),
                );
                let recall = zero_safe_div(
                    S::from_f64_lossy(tp as f64),
                    S::from_f64_lossy((tp + fn_) as f64),
                );
                let two = S::from_f64_lossy(2.0);
                let f1 = zero_safe_div(two * precision * recall, precision + recall);
                per_class.push(ClassMetrics { precision, recall, f1, support });
            }
            let inv_c = S::from_f64_lossy(1.0 / n_classes as f64);
            let macro_precision =
                per_class.iter().fold(S::zero(), |a, m| a + m.precision) * inv_c;
            let macro_recall = per_class.iter().fold(S::zero(), |a, m| a + m.recall) * inv_c;
            let macro_f1 = per_class.iter().fold(S::zero(), |a, m| a + m.f1) * inv_c;
            Ok(MetricsReport {
                task,
                n,
                accuracy: Some(S::from_f64_lossy(correct as f64 / n as f64)),
                per_class: Some(per_class),
                macro_precision: Some(macro_precision),
                macro_recall: Some(macro_recall),
                macro_f1: Some(macro_f1),
                confusion: Some(confusion),
                rmse: None,
                mae: None,
            })
        }
    }
}

/// Evaluate multi-output predictions column by column.
pub fn evaluate_columns<S: Scalar>(
    predictions: &[Vec<S>],
    truths: &[Vec<S>],
    task: TaskKind,
) -> Result<Vec<MetricsReport<S>>, MlError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(MlError::LengthMismatch {
            preds: predictions.len(),
            truths: truths.len(),
        });
    }
    let n_out = truths[0].len();
    (0..n_out)
        .map(|col| {
            let p: Vec<S> = predictions.iter().map(|r| r[col]).collect();
            let t: Vec<S> = truths.iter().map(|r| r[col]).collect();
            evaluate(&p, &t, task)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_confusion_fixture() {
        // preds [T,T,T,F], truth [T,F,T,F]; class 1 = T.
        let preds = vec![1.0f64, 1.0, 1.0, 0.0];
        let truth = vec![1.0, 0.0, 1.0, 0.0];
        let r = evaluate(&preds, &truth, TaskKind::Classification).unwrap();
        assert_eq!(r.accuracy, Some(0.75));
        let pos = &r.per_class.as_ref().unwrap()[1];
        assert!((pos.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(pos.recall, 1.0);
        assert!((pos.f1 - 0.8).abs() < 1e-12);
        let confusion = r.confusion.unwrap();
        assert_eq!(confusion, vec![vec![1, 1], vec![0, 2]]);
        // Row sums equal class supports.
        assert_eq!(confusion[0].iter().sum::<usize>(), 2);
        assert_eq!(confusion[1].iter().sum::<usize>(), 2);
    }

    #[test]
    fn perfect_predictions() {
        let v = vec![0.0f64, 1.0, 2.0, 1.0];
        let r = evaluate(&v, &v, TaskKind::Classification).unwrap();
        assert_eq!(r.accuracy, Some(1.0));
        for m in r.per_class.unwrap() {
            if m.support > 0 {
                assert_eq!(m.f1, 1.0);
            }
        }
    }

    #[test]
    fn regression_rmse_and_mae() {
        let r = evaluate(&[1.0f64, 2.0], &[1.0, 4.0], TaskKind::Regression).unwrap();
        assert!((r.rmse.unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.mae, Some(1.0));
    }

    #[test]
    fn rmse_at_least_mae() {
        let preds = vec![0.5f64, -1.0, 3.25, 2.0, 0.0];
        let truth = vec![0.0, 1.0, 3.0, -2.0, 0.5];
        let r = evaluate(&preds, &truth, TaskKind::Regression).unwrap();
        assert!(r.rmse.unwrap() >= r.mae.unwrap());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(evaluate(&[1.0f64], &[1.0, 2.0], TaskKind::Regression).is_err());
        assert!(evaluate::<f64>(&[], &[], TaskKind::Regression).is_err());
    }

    #[test]
    fn micro_recall_equals_accuracy() {
        // Weighted-by-support mean of per-class recall is accuracy.
        let preds = vec![0.0f64, 1.0, 2.0, 2.0, 1.0, 0.0, 2.0];
        let truth = vec![0.0, 1.0, 1.0, 2.0, 2.0, 0.0, 2.0];
        let r = evaluate(&preds, &truth, TaskKind::Classification).unwrap();
        let per_class = r.per_class.unwrap();
        let micro: f64 = per_class
            .iter()
            .map(|m| m.recall * m.support as f64)
            .sum::<f64>()
            / r.n as f64;
        assert!((micro - r.accuracy.unwrap()).abs() < 1e-12);
    }
}
