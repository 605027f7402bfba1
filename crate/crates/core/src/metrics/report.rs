use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::classification::{
    accuracy, macro_average, per_class_metrics, ClassMetrics, MacroAverage,
};
use super::confusion::{confusion, ConfusionMatrix};
use super::roc::{roc_micro_average, roc_one_vs_rest, RocCurve};
use crate::error::{Error, Result};
use crate::numerics::{argmax_unchecked, Matrix};

/// Full evaluation of one score matrix against true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: ClassMetrics,
    pub macro_avg: MacroAverage,
    pub accuracy: f64,
    /// `None` for classes without both positive and negative samples.
    pub roc_per_class: Vec<Option<RocCurve>>,
    pub roc_micro: RocCurve,
}

/// Predicts by row-wise argmax of `scores` and computes every metric.
pub fn evaluate(scores: &Matrix, truth: &[usize], class_names: &[String]) -> Result<EvalReport> {
    let c = scores.cols();
    if class_names.len() != c {
        return Err(Error::LengthMismatch {
            what: "class names",
            expected: c,
            actual: class_names.len(),
        });
    }
    if scores.rows() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "true labels",
            expected: scores.rows(),
            actual: truth.len(),
        });
    }
    let predicted: Vec<usize> = scores.row_iter().map(argmax_unchecked).collect();
    let cm = confusion(truth, &predicted, c)?.with_class_names(class_names.to_vec())?;
    let per_class = per_class_metrics(&cm);
    let macro_avg = macro_average(&per_class);
    let acc = accuracy(&cm)?;
    let roc_per_class = (0..c)
        .map(|k| {
            let support = cm.support(k);
            (support > 0 && support < cm.total())
                .then(|| roc_one_vs_rest(scores, truth, k))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    let roc_micro = roc_micro_average(scores, truth)?;
    Ok(EvalReport {
        confusion: cm,
        per_class,
        macro_avg,
        accuracy: acc,
        roc_per_class,
        roc_micro,
    })
}

/// Mean over all entries of `(onehot(label) - p)²`.
pub fn mean_squared_error(probs: &Matrix, truth: &[usize]) -> Result<f64> {
    if probs.rows() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "true labels",
            expected: probs.rows(),
            actual: truth.len(),
        });
    }
    if probs.rows() == 0 || probs.cols() == 0 {
        return Err(Error::Empty {
            what: "mean squared error",
        });
    }
    let mut sum = 0.0;
    for (row, &t) in probs.row_iter().zip(truth) {
        if t >= probs.cols() {
            return Err(Error::LabelOutOfRange {
                label: t,
                num_classes: probs.cols(),
            });
        }
        for (k, &p) in row.iter().enumerate() {
            let target = if k == t { 1.0 } else { 0.0 };
            sum += (target - p) * (target - p);
        }
    }
    Ok(sum / probs.values().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn perfect_scores_report() {
        let scores = Matrix::from_rows(&[
            [0.9, 0.1, 0.0],
            [0.0, 0.8, 0.2],
            [0.1, 0.1, 0.8],
            [0.7, 0.2, 0.1],
        ])
        .unwrap();
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let r = evaluate(&scores, &[0, 1, 2, 0], &names).unwrap();
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.macro_avg.f1, 100.0);
        assert_eq!(r.roc_micro.auc, 1.0);
        assert!(r
            .roc_per_class
            .iter()
            .all(|c| c.as_ref().unwrap().auc == 1.0));
        assert_eq!(r.confusion.class_names, names);
    }

    #[test]
    fn absent_class_has_no_roc() {
        let scores = Matrix::from_rows(&[[0.9, 0.1, 0.0], [0.2, 0.7, 0.1]]).unwrap();
        let names: Vec<String> = (0..3).map(|i| i.to_string()).collect();
        let r = evaluate(&scores, &[0, 1], &names).unwrap();
        assert!(r.roc_per_class[2].is_none());
    }

    #[test]
    fn mse_example() {
        let probs = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!((mean_squared_error(&probs, &[0]).unwrap() - 0.25).abs() < 1e-15);
    }
}
