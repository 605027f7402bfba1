use alloc::vec;
use alloc::vec::Vec;

use super::predictions::{PredictionSet, WeightVector};
use crate::error::{invalid, Error, Result};
use crate::numerics::{argmax_unchecked, Matrix};

/// Combined scores and the labels they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Row-wise argmax of `combined`.
    pub labels: Vec<usize>,
    /// Raw weighted sums; rows sum to `Σw`.
    pub combined: Matrix,
}

impl EnsembleResult {
    /// Percentage of samples whose label matches `truth`.
    pub fn accuracy(&self, truth: &[usize]) -> Result<f64> {
        if truth.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                what: "true labels",
                expected: self.labels.len(),
                actual: truth.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::Empty { what: "accuracy" });
        }
        let correct = self
            .labels
            .iter()
            .zip(truth)
            .filter(|(a, b)| a == b)
            .count();
        Ok(correct as f64 / truth.len() as f64 * 100.0)
    }

    /// `combined` with every row divided by its sum.
    pub fn normalized(&self) -> Matrix {
        let mut out = self.combined.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        out
    }
}

/// `combined[n][c] = Σ_m w_m · probs[m][n][c]`, summed in model order.
pub fn weighted_combine(preds: &PredictionSet, w: &WeightVector) -> Result<EnsembleResult> {
    if w.len() != preds.num_models() {
        return Err(Error::LengthMismatch {
            what: "weight vector",
            expected: preds.num_models(),
            actual: w.len(),
        });
    }
    let (n, c) = (preds.num_samples(), preds.num_classes());
    let mut combined = vec![0.0; n * c];
    accumulate(preds, w.as_slice(), &mut combined);
    let combined = Matrix::from_raw(n, c, combined);
    let labels = combined.row_iter().map(argmax_unchecked).collect();
    Ok(EnsembleResult { labels, combined })
}

/// Adds each weighted model into `out`; zero weights contribute nothing.
pub(super) fn accumulate(preds: &PredictionSet, weights: &[f64], out: &mut [f64]) {
    for (m, &wm) in weights.iter().enumerate() {
        if wm == 0.0 {
            continue;
        }
        for (o, &p) in out.iter_mut().zip(preds.model_probs(m)) {
            *o += wm * p;
        }
    }
}

/// Equal-weight combination over `subset`, zero weight elsewhere.
pub fn average_ensemble(preds: &PredictionSet, subset: &[usize]) -> Result<EnsembleResult> {
    if subset.is_empty() {
        return Err(Error::Empty {
            what: "ensemble subset",
        });
    }
    let m = preds.num_models();
    let mut weights = vec![0.0; m];
    let share = 1.0 / subset.len() as f64;
    for &i in subset {
        match weights.get_mut(i) {
            None => return Err(invalid!("model index {i} out of range for {m} models")),
            Some(w) if *w != 0.0 => return Err(invalid!("model index {i} repeated in subset")),
            Some(w) => *w = share,
        }
    }
    weighted_combine(preds, &WeightVector::new(weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use proptest::prelude::*;

    fn set(models: &[&[[f64; 2]]]) -> PredictionSet {
        let names: Vec<String> = (0..models.len()).map(|i| alloc::format!("m{i}")).collect();
        let mats = models
            .iter()
            .map(|rows| Matrix::from_rows(rows).unwrap())
            .collect();
        PredictionSet::from_matrices(names, mats).unwrap()
    }

    #[test]
    fn hand_arithmetic_example() {
        let p = set(&[&[[0.6, 0.4]], &[[0.2, 0.8]]]);
        let r = weighted_combine(&p, &WeightVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!((r.combined.get(0, 0) - 0.4).abs() < 1e-15);
        assert!((r.combined.get(0, 1) - 0.6).abs() < 1e-15);
        assert_eq!(r.labels, [1]);
    }

    #[test]
    fn one_hot_selects_model() {
        let p = set(&[&[[0.6, 0.4], [0.3, 0.7]], &[[0.2, 0.8], [0.9, 0.1]]]);
        for k in 0..2 {
            let r = weighted_combine(&p, &WeightVector::one_hot(2, k).unwrap()).unwrap();
            let own: Vec<usize> = p.model_matrix(k).row_iter().map(argmax_unchecked).collect();
            assert_eq!(r.labels, own);
        }
    }

    #[test]
    fn length_and_subset_errors() {
        let p = set(&[&[[0.6, 0.4]], &[[0.2, 0.8]]]);
        assert!(weighted_combine(&p, &WeightVector::uniform(3).unwrap()).is_err());
        assert!(average_ensemble(&p, &[]).is_err());
        assert!(average_ensemble(&p, &[0, 0]).is_err());
        assert!(average_ensemble(&p, &[2]).is_err());
    }

    #[test]
    fn singleton_subset_is_model_itself() {
        let p = set(&[&[[0.6, 0.4], [0.1, 0.9]], &[[0.2, 0.8], [0.5, 0.5]]]);
        let r = average_ensemble(&p, &[1]).unwrap();
        assert_eq!(r.combined, p.model_matrix(1));
    }

    #[test]
    fn accuracy_and_normalization() {
        let p = set(&[&[[0.6, 0.4], [0.1, 0.9]]]);
        let r = weighted_combine(&p, &WeightVector::new(vec![2.0]).unwrap()).unwrap();
        assert_eq!(r.accuracy(&[0, 0]).unwrap(), 50.0);
        let norm = r.normalized();
        assert!((norm.get(1, 1) - 0.9).abs() < 1e-15);
    }

    fn arb_set() -> impl Strategy<Value = (PredictionSet, Vec<f64>)> {
        (1usize..5, 1usize..12, 2usize..5).prop_flat_map(|(m, n, c)| {
            (
                proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, c), m * n),
                proptest::collection::vec(0.0f64..2.0, m),
            )
                .prop_map(move |(rows, w)| {
                    let mats = rows
                        .chunks(n)
                        .map(|chunk| {
                            let normed: Vec<Vec<f64>> = chunk
                                .iter()
                                .map(|r| {
                                    let s: f64 = r.iter().sum();
                                    r.iter().map(|v| v / s).collect()
                                })
                                .collect();
                            Matrix::from_rows(&normed).unwrap()
                        })
                        .collect();
                    let names = (0..m).map(|i| i.to_string()).collect();
                    let mut w = w;
                    w[0] += 0.1;
                    (PredictionSet::from_matrices(names, mats).unwrap(), w)
                })
        })
    }

    proptest! {
        #[test]
        fn positive_scale_keeps_labels((p, w) in arb_set(), c in 0.01f64..100.0) {
            let w = WeightVector::new(w).unwrap();
            let a = weighted_combine(&p, &w).unwrap();
            let b = weighted_combine(&p, &w.scaled(c).unwrap()).unwrap();
            // scaling can only flip exact ties; require a clear winner
            for (r, row) in a.combined.row_iter().enumerate() {
                let best = row[a.labels[r]];
                let clear = row.iter().enumerate().all(|(k, &v)| k == a.labels[r] || best - v > 1e-9);
                if clear {
                    prop_assert_eq!(a.labels[r], b.labels[r]);
                }
            }
        }

        #[test]
        fn permutation_equivariance((p, w) in arb_set(), seed in 0u64..1000) {
            let m = p.num_models();
            let mut order: Vec<usize> = (0..m).collect();
            crate::SeededRng::new(seed).shuffle(&mut order);
            let pw: Vec<f64> = order.iter().map(|&i| w[i]).collect();
            let a = weighted_combine(&p, &WeightVector::new(w).unwrap()).unwrap();
            let b = weighted_combine(&p.permute_models(&order).unwrap(), &WeightVector::new(pw).unwrap()).unwrap();
            for (x, y) in a.combined.values().iter().zip(b.combined.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn average_of_all_equals_uniform((p, _w) in arb_set()) {
            let m = p.num_models();
            let all: Vec<usize> = (0..m).collect();
            let a = average_ensemble(&p, &all).unwrap();
            let b = weighted_combine(&p, &WeightVector::uniform(m).unwrap()).unwrap();
            prop_assert_eq!(a.labels, b.labels);
        }
    }
}
