use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::combine::average_ensemble;
use super::lattice::enumerate_subsets;
use super::predictions::PredictionSet;
use crate::error::{invalid, Result};
use crate::metrics::{evaluate, ClassMetrics, MacroAverage};

/// One average-ensemble row of the pairwise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Member model names joined with `" + "`.
    pub name: String,
    pub members: Vec<usize>,
    pub accuracy: f64,
    pub macro_avg: MacroAverage,
    pub per_class: ClassMetrics,
}

/// Average ensembles of every model pair, followed by the all-model average.
pub fn pairwise_ensemble_sweep(preds: &PredictionSet, truth: &[usize]) -> Result<Vec<SweepRow>> {
    let m = preds.num_models();
    if m < 2 {
        return Err(invalid!(
            "pairwise sweep needs at least two models, got {m}"
        ));
    }
    let mut subsets = enumerate_subsets(m, 2)?;
    subsets.push((0..m).collect());
    subsets
        .into_iter()
        .map(|members| {
            let result = average_ensemble(preds, &members)?;
            let report = evaluate(&result.combined, truth, preds.class_names())?;
            let name = members
                .iter()
                .map(|&i| preds.model_names()[i].as_str())
                .collect::<Vec<_>>()
                .join(" + ");
            Ok(SweepRow {
                name,
                members,
                accuracy: report.accuracy,
                macro_avg: report.macro_avg,
                per_class: report.per_class,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use alloc::string::ToString;
    use alloc::vec;

    fn set(m: usize) -> PredictionSet {
        let mats = (0..m)
            .map(|i| {
                let p = 0.3 + 0.1 * i as f64;
                Matrix::from_rows(&[[p, 1.0 - p], [1.0 - p, p], [0.5, 0.5]]).unwrap()
            })
            .collect();
        PredictionSet::from_matrices((0..m).map(|i| alloc::format!("M{i}")).collect(), mats)
            .unwrap()
    }

    #[test]
    fn seven_models_give_22_rows() {
        let rows = pairwise_ensemble_sweep(&set(7), &[1, 0, 0]).unwrap();
        assert_eq!(rows.len(), 22);
        assert_eq!(rows[0].name, "M0 + M1");
        assert_eq!(rows[21].members.len(), 7);
        assert!(rows.iter().all(|r| (0.0..=100.0).contains(&r.accuracy)));
    }

    #[test]
    fn two_models_give_identical_rows() {
        let rows = pairwise_ensemble_sweep(&set(2), &[1, 0, 0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].accuracy, rows[1].accuracy);
        assert_eq!(rows[0].macro_avg, rows[1].macro_avg);
    }

    #[test]
    fn needs_two_models() {
        let one = PredictionSet::from_matrices(
            vec!["x".to_string()],
            vec![Matrix::from_rows(&[[1.0, 0.0]]).unwrap()],
        )
        .unwrap();
        assert!(pairwise_ensemble_sweep(&one, &[0]).is_err());
    }
}
