//! Post-backbone classification toolkit.
//!
//! This crate holds the numeric core: L1-regularized dense classifier heads
//! with batch renormalization and dropout, weighted-average ensembling of
//! per-model class probabilities with an exhaustive weight-lattice search,
//! and multiclass evaluation metrics (confusion matrix, precision / recall /
//! F1, one-vs-rest and micro-averaged ROC).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line tool live in the `wavens` companion crate.
//!
//! All reals are `f64`. All randomness flows through [`SeededRng`], so every
//! operation is deterministic for a given seed.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod data;
pub mod ensemble;
mod error;
pub mod head;
pub mod metrics;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::{Matrix, SeededRng};
