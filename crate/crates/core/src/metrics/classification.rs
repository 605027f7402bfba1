use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use crate::error::{Error, Result};

/// One-vs-rest scores for a single class, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// `TP + FP == 0`; precision reported as 0.
    pub precision_undefined: bool,
    /// `TP + FN == 0`; recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub classes: Vec<ClassScore>,
}

impl ClassMetrics {
    pub fn any_undefined(&self) -> bool {
        self.classes
            .iter()
            .any(|c| c.precision_undefined || c.recall_undefined)
    }
}

/// Unweighted mean over classes, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio_percent(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64 * 100.0, false)
    }
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> ClassMetrics {
    let classes = (0..cm.num_classes())
        .map(|c| {
            let tp = cm.true_positives(c);
            let (precision, precision_undefined) = ratio_percent(tp, tp + cm.false_positives(c));
            let (recall, recall_undefined) = ratio_percent(tp, tp + cm.false_negatives(c));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScore {
                precision,
                recall,
                f1,
                support: cm.support(c),
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    ClassMetrics { classes }
}

/// `100 · trace / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty { what: "accuracy" });
    }
    Ok(cm.trace() as f64 / total as f64 * 100.0)
}

pub fn macro_average(metrics: &ClassMetrics) -> MacroAverage {
    let n = metrics.classes.len();
    if n == 0 {
        return MacroAverage {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let mean = |f: fn(&ClassScore) -> f64| metrics.classes.iter().map(f).sum::<f64>() / n as f64;
    MacroAverage {
        precision: mean(|c| c.precision),
        recall: mean(|c| c.recall),
        f1: mean(|c| c.f1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::confusion;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(c: usize) -> Vec<alloc::string::String> {
        (0..c).map(|i| i.to_string()).collect()
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_counts(names(3), vec![4, 0, 0, 0, 2, 0, 0, 0, 9]).unwrap();
        let m = per_class_metrics(&cm);
        for c in &m.classes {
            assert_eq!((c.precision, c.recall, c.f1), (100.0, 100.0, 100.0));
        }
        assert_eq!(accuracy(&cm).unwrap(), 100.0);
    }

    #[test]
    fn formula_example() {
        // class 0: TP=8, FN=1 (row), FP=2 (column)
        let cm = ConfusionMatrix::from_counts(names(2), vec![8, 1, 2, 5]).unwrap();
        let c = per_class_metrics(&cm).classes[0];
        assert!((c.precision - 80.0).abs() < 1e-12);
        assert!((c.recall - 800.0 / 9.0).abs() < 1e-12);
        assert!((c.f1 - 84.210_526_315_789_47).abs() < 1e-9);
    }

    #[test]
    fn absent_class_is_flagged() {
        let cm = confusion(&[0, 1, 0], &[0, 1, 1], 3).unwrap();
        let c = per_class_metrics(&cm).classes[2];
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        assert!(c.precision_undefined && c.recall_undefined);
    }

    #[test]
    fn accuracy_cases() {
        let cm = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(accuracy(&cm).unwrap(), 75.0);
        let cm = confusion(&[0, 1], &[1, 0], 2).unwrap();
        assert_eq!(accuracy(&cm).unwrap(), 0.0);
        assert!(accuracy(&confusion(&[], &[], 2).unwrap()).is_err());
    }

    fn score(p: f64) -> ClassScore {
        ClassScore {
            precision: p,
            recall: p,
            f1: p,
            support: 1,
            precision_undefined: false,
            recall_undefined: false,
        }
    }

    #[test]
    fn macro_average_cases() {
        let m = ClassMetrics {
            classes: vec![score(70.0); 4],
        };
        assert_eq!(macro_average(&m).precision, 70.0);
        let m = ClassMetrics {
            classes: vec![score(100.0), score(0.0)],
        };
        assert_eq!(macro_average(&m).recall, 50.0);
        let m = ClassMetrics {
            classes: vec![score(80.0), score(90.0), score(100.0)],
        };
        assert!((macro_average(&m).precision - 90.0).abs() < 1e-12);
    }
}
