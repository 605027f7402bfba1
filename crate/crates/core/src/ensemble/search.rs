use alloc::vec;
use alloc::vec::Vec;

use super::combine::accumulate;
use super::lattice::{GridSpec, Lattice};
use super::predictions::{PredictionSet, WeightVector};
use crate::error::{Error, Result};
use crate::numerics::argmax_unchecked;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub weights: Vec<f64>,
    /// Percent.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub best: WeightVector,
    /// Percent.
    pub best_accuracy: f64,
    pub evaluated: u128,
    /// Every visited point in lexicographic order, when requested.
    pub trace: Vec<TraceRow>,
}

/// Exhaustive accuracy search over the weight lattice.
///
/// Each point is scored exactly as [`super::weighted_combine`] would label
/// it. The first point (in lexicographic order) reaching the highest
/// accuracy wins.
pub fn grid_search_weights(
    preds: &PredictionSet,
    truth: &[usize],
    spec: &GridSpec,
    keep_trace: bool,
) -> Result<GridSearchOutcome> {
    let (n, c) = (preds.num_samples(), preds.num_classes());
    if truth.len() != n {
        return Err(Error::LengthMismatch {
            what: "true labels",
            expected: n,
            actual: truth.len(),
        });
    }
    if n == 0 {
        return Err(Error::Empty {
            what: "grid search samples",
        });
    }
    if let Some(&label) = truth.iter().find(|&&t| t >= c) {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: c,
        });
    }
    let lattice = Lattice::new(preds.num_models(), spec)?;

    let mut combined = vec![0.0; n * c];
    let mut weights = vec![0.0; preds.num_models()];
    let mut best: Option<(usize, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut evaluated = 0u128;
    lattice.for_each_counts(|counts| {
        for (w, &k) in weights.iter_mut().zip(counts) {
            *w = lattice.weight_of(k);
        }
        combined.iter_mut().for_each(|v| *v = 0.0);
        accumulate(preds, &weights, &mut combined);
        let correct = combined
            .chunks_exact(c)
            .zip(truth)
            .filter(|(row, &t)| argmax_unchecked(row) == t)
            .count();
        evaluated += 1;
        if keep_trace {
            trace.push(TraceRow {
                weights: weights.clone(),
                accuracy: percent(correct, n),
            });
        }
        if best.as_ref().is_none_or(|(b, _)| correct > *b) {
            best = Some((correct, weights.clone()));
        }
    });
    let (correct, w) = best.ok_or(Error::Empty {
        what: "weight lattice",
    })?;
    Ok(GridSearchOutcome {
        best: WeightVector::new(w)?,
        best_accuracy: percent(correct, n),
        evaluated,
        trace,
    })
}

#[inline]
fn percent(correct: usize, n: usize) -> f64 {
    correct as f64 / n as f64 * 100.0
}
