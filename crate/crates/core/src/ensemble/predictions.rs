use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;

/// Allowed deviation of a probability row's sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// `M` models × `N` samples × `C` classes of probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    model_names: Vec<String>,
    class_names: Vec<String>,
    num_samples: usize,
    /// Model-major: `probs[(m * N + n) * C + c]`.
    probs: Vec<f64>,
}

impl PredictionSet {
    /// Assembles a set from one `N × C` matrix per model. Rows must be
    /// distributions within [`ROW_SUM_TOLERANCE`].
    pub fn new(
        model_names: Vec<String>,
        class_names: Vec<String>,
        matrices: Vec<Matrix>,
    ) -> Result<Self> {
        if model_names.is_empty() {
            return Err(Error::Empty {
                what: "prediction set",
            });
        }
        if model_names.len() != matrices.len() {
            return Err(Error::LengthMismatch {
                what: "model matrices",
                expected: model_names.len(),
                actual: matrices.len(),
            });
        }
        for (i, name) in model_names.iter().enumerate() {
            if model_names[..i].contains(name) {
                return Err(invalid!("duplicate model name {name:?}"));
            }
        }
        let c = class_names.len();
        if c == 0 {
            return Err(Error::Empty {
                what: "class names",
            });
        }
        let n = matrices[0].rows();
        let mut probs = Vec::with_capacity(model_names.len() * n * c);
        for (name, m) in model_names.iter().zip(&matrices) {
            if m.shape() != (n, c) {
                return Err(Error::ShapeMismatch {
                    op: "prediction set",
                    left: (n, c),
                    right: m.shape(),
                });
            }
            for (row_idx, row) in m.row_iter().enumerate() {
                check_row(row).map_err(|why| invalid!("model {name:?} row {row_idx}: {why}"))?;
            }
            probs.extend_from_slice(m.values());
        }
        Ok(Self {
            model_names,
            class_names,
            num_samples: n,
            probs,
        })
    }

    /// Like [`PredictionSet::new`] with class names `"0".."C-1"`.
    pub fn from_matrices(model_names: Vec<String>, matrices: Vec<Matrix>) -> Result<Self> {
        let c = matrices.first().map_or(0, Matrix::cols);
        Self::new(
            model_names,
            (0..c).map(|i| i.to_string()).collect(),
            matrices,
        )
    }

    #[inline]
    pub fn num_models(&self) -> usize {
        self.model_names.len()
    }

    #[inline]
    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Model `m`'s probabilities as a flat row-major `N × C` slice.
    #[inline]
    pub fn model_probs(&self, m: usize) -> &[f64] {
        let block = self.num_samples * self.num_classes();
        &self.probs[m * block..(m + 1) * block]
    }

    pub fn model_matrix(&self, m: usize) -> Matrix {
        Matrix::from_raw(
            self.num_samples,
            self.num_classes(),
            self.model_probs(m).to_vec(),
        )
    }

    /// Restricts every model to the given samples, in order.
    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.num_samples) {
            return Err(invalid!(
                "sample index {bad} out of range for {} samples",
                self.num_samples
            ));
        }
        let matrices = (0..self.num_models())
            .map(|m| self.model_matrix(m).select_rows(indices))
            .collect();
        Self::new(self.model_names.clone(), self.class_names.clone(), matrices)
    }

    /// Reorders models; `order[i]` is the old index of new model `i`.
    pub fn permute_models(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.num_models() {
            return Err(Error::LengthMismatch {
                what: "model permutation",
                expected: self.num_models(),
                actual: order.len(),
            });
        }
        let names = order.iter().map(|&i| self.model_names[i].clone()).collect();
        let matrices = order.iter().map(|&i| self.model_matrix(i)).collect();
        Self::new(names, self.class_names.clone(), matrices)
    }
}

fn check_row(row: &[f64]) -> core::result::Result<(), String> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("entries must be finite and nonnegative".to_string());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(alloc::format!("row sums to {sum}, expected 1"));
    }
    Ok(())
}

/// Nonnegative per-model ensemble weights with at least one positive entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty {
                what: "weight vector",
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid!("weights must be finite and nonnegative"));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(invalid!("weight vector is all zeros"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0 / m as f64; m])
    }

    pub fn one_hot(m: usize, k: usize) -> Result<Self> {
        let mut w = alloc::vec![0.0; m];
        *w.get_mut(k)
            .ok_or_else(|| invalid!("one-hot index {k} out of range for {m} models"))? = 1.0;
        Self::new(w)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|w| w * c).collect())
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_bad_rows_and_duplicate_names() {
        let good = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let bad = Matrix::from_rows(&[[0.5, 0.6]]).unwrap();
        assert!(PredictionSet::from_matrices(names(&["a"]), vec![bad]).is_err());
        assert!(
            PredictionSet::from_matrices(names(&["a", "a"]), vec![good.clone(), good.clone()])
                .is_err()
        );
        let neg = Matrix::from_rows(&[[1.5, -0.5]]).unwrap();
        assert!(PredictionSet::from_matrices(names(&["a"]), vec![neg]).is_err());
        let set = PredictionSet::from_matrices(names(&["a"]), vec![good]).unwrap();
        assert_eq!(
            (set.num_models(), set.num_samples(), set.num_classes()),
            (1, 1, 2)
        );
    }

    #[test]
    fn weight_vector_invariants() {
        assert!(WeightVector::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![0.5, -0.1]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert_eq!(
            WeightVector::one_hot(3, 1).unwrap().as_slice(),
            &[0.0, 1.0, 0.0]
        );
        assert!(WeightVector::one_hot(3, 3).is_err());
    }
}
