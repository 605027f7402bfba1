use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Validation-loss early stopping with best-snapshot restoration.
///
/// An observation strictly below the best so far resets the counter and
/// snapshots the parameters; anything else increments it. Training stops
/// once the counter reaches `patience`.
#[derive(Debug, Clone)]
pub struct EarlyStopping<P> {
    patience: usize,
    best_value: f64,
    best_epoch: Option<usize>,
    best_snapshot: Option<P>,
    epochs_since_improvement: usize,
    observed: usize,
}

impl<P: Clone> EarlyStopping<P> {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_value: f64::INFINITY,
            best_epoch: None,
            best_snapshot: None,
            epochs_since_improvement: 0,
            observed: 0,
        }
    }

    pub fn monitor(&self) -> &'static str {
        "val_loss"
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    /// 1-based epoch of the best observation.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn epochs_since_improvement(&self) -> usize {
        self.epochs_since_improvement
    }

    pub fn best_snapshot(&self) -> Option<&P> {
        self.best_snapshot.as_ref()
    }

    pub fn into_best(self) -> Option<P> {
        self.best_snapshot
    }

    pub fn update(&mut self, val_loss: f64, params: &P) -> Result<Decision> {
        if val_loss.is_nan() {
            return Err(invalid!(
                "validation loss is NaN at epoch {}; training diverged",
                self.observed + 1
            ));
        }
        self.observed += 1;
        if val_loss < self.best_value {
            self.best_value = val_loss;
            self.best_epoch = Some(self.observed);
            self.best_snapshot = Some(params.clone());
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
        }
        Ok(if self.epochs_since_improvement >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        })
    }
}
