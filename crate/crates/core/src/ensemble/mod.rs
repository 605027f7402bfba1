//! Combining per-model class probabilities.
//!
//! A [`PredictionSet`] holds `M` models' `N × C` probability matrices. The
//! weighted combination multiplies each model's matrix by its weight and
//! sums, then labels each sample by argmax (lowest index on ties). Weights
//! are used as given; since every input row sums to one, the combined rows
//! sum to `Σw` and [`EnsembleResult::normalized`] divides that back out.

mod combine;
mod lattice;
mod predictions;
mod search;
mod sweep;

pub use combine::{average_ensemble, weighted_combine, EnsembleResult};
pub use lattice::{
    binomial, enumerate_subsets, enumerate_weight_lattice, GridSpec, Lattice, LatticeMode,
};
pub use predictions::{PredictionSet, WeightVector, ROW_SUM_TOLERANCE};
pub use search::{grid_search_weights, GridSearchOutcome, TraceRow};
pub use sweep::{pairwise_ensemble_sweep, SweepRow};
