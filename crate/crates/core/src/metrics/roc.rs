use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;

/// ROC points from `(0, 0)` to `(1, 1)` with the trapezoidal area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` pairs.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps thresholds over the distinct scores in descending order; samples
/// sharing a score move the curve in a single step.
pub fn roc_binary(scores: &[f64], positive: &[bool]) -> Result<RocCurve> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch {
            what: "roc labels",
            expected: scores.len(),
            actual: positive.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite { what: "roc scores" });
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(invalid!(
            "roc needs at least one positive and one negative sample (got {n_pos} positive, {n_neg} negative)"
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(order.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().unwrap();
        let next = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        auc += (next.0 - prev.0) * (next.1 + prev.1) / 2.0;
        points.push(next);
    }
    Ok(RocCurve { points, auc })
}

/// ROC of class `class` against all others.
pub fn roc_one_vs_rest(scores: &Matrix, truth: &[usize], class: usize) -> Result<RocCurve> {
    check_scores(scores, truth)?;
    if class >= scores.cols() {
        return Err(Error::LabelOutOfRange {
            label: class,
            num_classes: scores.cols(),
        });
    }
    let column: Vec<f64> = scores.row_iter().map(|r| r[class]).collect();
    let positive: Vec<bool> = truth.iter().map(|&t| t == class).collect();
    roc_binary(&column, &positive)
}

/// Single ROC over all `N · C` pooled one-vs-rest decisions.
pub fn roc_micro_average(scores: &Matrix, truth: &[usize]) -> Result<RocCurve> {
    check_scores(scores, truth)?;
    if scores.rows() == 0 {
        return Err(Error::Empty {
            what: "micro-average roc",
        });
    }
    if scores.cols() < 2 {
        return Err(invalid!("micro-average roc needs at least two classes"));
    }
    let mut positive = Vec::with_capacity(scores.values().len());
    for &t in truth {
        positive.extend((0..scores.cols()).map(|c| c == t));
    }
    roc_binary(scores.values(), &positive)
}

fn check_scores(scores: &Matrix, truth: &[usize]) -> Result<()> {
    if scores.rows() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "roc labels",
            expected: scores.rows(),
            actual: truth.len(),
        });
    }
    if let Some(&label) = truth.iter().find(|&&t| t >= scores.cols()) {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: scores.cols(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Fraction of (positive, negative) pairs ranked correctly, ties ½.
    fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &pi) in positive.iter().enumerate() {
            if !pi {
                continue;
            }
            for (j, &pj) in positive.iter().enumerate() {
                if pj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_separation() {
        let roc = roc_binary(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn constant_scores_are_chance() {
        let roc = roc_binary(&[0.4; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(roc.auc, 0.5);
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn pair_count_example() {
        let scores = [0.9, 0.4, 0.6, 0.1];
        let pos = [true, true, false, false];
        let roc = roc_binary(&scores, &pos).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-12);
        assert!((pair_count_auc(&scores, &pos) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(roc_binary(&[0.1, 0.2], &[true, true]).is_err());
        let scores = Matrix::from_rows(&[[0.3, 0.7], [0.6, 0.4]]).unwrap();
        assert!(roc_one_vs_rest(&scores, &[1, 1], 1).is_err());
    }

    #[test]
    fn micro_average_cases() {
        let onehot =
            Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(roc_micro_average(&onehot, &[0, 1, 2]).unwrap().auc, 1.0);
        let uniform = Matrix::from_rows(&[[0.25; 4], [0.25; 4]]).unwrap();
        assert_eq!(roc_micro_average(&uniform, &[3, 0]).unwrap().auc, 0.5);
    }

    proptest::proptest! {
        #[test]
        fn trapezoid_matches_pair_count(
            data in proptest::collection::vec((0u8..8, proptest::bool::ANY), 2..120)
        ) {
            // coarse scores force plenty of ties
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 8.0).collect();
            let pos: Vec<bool> = data.iter().map(|(_, p)| *p).collect();
            let n_pos = pos.iter().filter(|&&p| p).count();
            proptest::prop_assume!(n_pos > 0 && n_pos < pos.len());
            let roc = roc_binary(&scores, &pos).unwrap();
            proptest::prop_assert!((roc.auc - pair_count_auc(&scores, &pos)).abs() < 1e-9);
            for w in roc.points.windows(2) {
                proptest::prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
            proptest::prop_assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
        }
    }
}
