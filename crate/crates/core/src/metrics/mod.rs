//! Multiclass evaluation: confusion matrix, per-class precision / recall /
//! F1, macro averages, one-vs-rest and micro-averaged ROC curves.
//!
//! Percentages are reported on a 0–100 scale at full precision.

mod classification;
mod confusion;
mod report;
mod roc;

pub use classification::{
    accuracy, macro_average, per_class_metrics, ClassMetrics, ClassScore, MacroAverage,
};
pub use confusion::{confusion, ConfusionMatrix};
pub use report::{evaluate, mean_squared_error, EvalReport};
pub use roc::{roc_binary, roc_micro_average, roc_one_vs_rest, RocCurve};
