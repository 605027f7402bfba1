use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Count matrix with rows indexed by the true class and columns by the
/// predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(class_names: Vec<String>) -> Self {
        let c = class_names.len();
        Self {
            class_names,
            counts: vec![0; c * c],
        }
    }

    /// Rebuilds a matrix from row-major counts.
    pub fn from_counts(class_names: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let c = class_names.len();
        if counts.len() != c * c {
            return Err(Error::LengthMismatch {
                what: "confusion counts",
                expected: c * c,
                actual: counts.len(),
            });
        }
        Ok(Self {
            class_names,
            counts,
        })
    }

    /// Replaces the default numeric class names.
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes() {
            return Err(Error::LengthMismatch {
                what: "class names",
                expected: self.num_classes(),
                actual: names.len(),
            });
        }
        self.class_names = names;
        Ok(self)
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    #[inline]
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes() + predicted]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        let c = self.num_classes();
        &self.counts[truth * c..(truth + 1) * c]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.get(i, i)).sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.get(class, class)
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.num_classes())
            .filter(|&t| t != class)
            .map(|t| self.get(t, class))
            .sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.num_classes())
            .filter(|&p| p != class)
            .map(|p| self.get(class, p))
            .sum()
    }

    pub fn true_negatives(&self, class: usize) -> u64 {
        self.total()
            - self.true_positives(class)
            - self.false_positives(class)
            - self.false_negatives(class)
    }

    /// Number of samples whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.row(class).iter().sum()
    }
}

/// Tallies `counts[t][p]` over paired true/predicted labels.
pub fn confusion(
    truth: &[usize],
    predicted: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "predicted labels",
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let names = (0..num_classes).map(|i| i.to_string()).collect();
    let mut cm = ConfusionMatrix::zeros(names);
    for (&t, &p) in truth.iter().zip(predicted) {
        for label in [t, p] {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange { label, num_classes });
            }
        }
        cm.counts[t * num_classes + p] += 1;
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_are_diagonal() {
        let labels = [0, 1, 2, 2, 1, 0, 0];
        let cm = confusion(&labels, &labels, 3).unwrap();
        assert_eq!(cm.trace(), 7);
        assert_eq!(cm.total(), 7);
        for t in 0..3 {
            for p in 0..3 {
                if t != p {
                    assert_eq!(cm.get(t, p), 0);
                }
            }
        }
    }

    #[test]
    fn hand_counted_example() {
        let cm = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(cm.counts(), &[1, 1, 0, 2]);
        assert_eq!(cm.support(0), 2);
        assert_eq!(cm.false_positives(1), 1);
        assert_eq!(cm.true_negatives(1), 1);
    }

    #[test]
    fn empty_input_gives_zero_matrix() {
        let cm = confusion(&[], &[], 4).unwrap();
        assert_eq!(cm.total(), 0);
        assert_eq!(cm.counts().len(), 16);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        assert_eq!(
            confusion(&[0, 3], &[0, 1], 3),
            Err(Error::LabelOutOfRange {
                label: 3,
                num_classes: 3
            })
        );
        assert!(confusion(&[0], &[0, 1], 3).is_err());
    }
}
