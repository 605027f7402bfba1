use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Batch renormalization hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormConfig {
    pub epsilon: f64,
    pub r_max: f64,
    pub d_max: f64,
    /// Running statistics decay: `run = momentum·run + (1 − momentum)·batch`.
    pub momentum: f64,
}

impl Default for RenormConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            r_max: 3.0,
            d_max: 5.0,
            momentum: 0.99,
        }
    }
}

impl RenormConfig {
    /// `r_max = 1, d_max = 0`: the layer becomes plain batch normalization.
    pub fn plain_batch_norm() -> Self {
        Self {
            r_max: 1.0,
            d_max: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid!(
                "renorm epsilon must be positive, got {}",
                self.epsilon
            ));
        }
        if !(self.r_max >= 1.0 && self.r_max.is_finite()) {
            return Err(invalid!("r_max must be at least 1, got {}", self.r_max));
        }
        if !(self.d_max >= 0.0 && self.d_max.is_finite()) {
            return Err(invalid!("d_max must be nonnegative, got {}", self.d_max));
        }
        if !(self.momentum > 0.0 && self.momentum <= 1.0) {
            return Err(invalid!(
                "momentum must be in (0, 1], got {}",
                self.momentum
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub input_dim: usize,
    pub hidden_dims: [usize; 3],
    pub num_classes: usize,
    /// L1 coefficient of the three hidden dense layers.
    pub lambda: f64,
    pub dropout_rate: f64,
    pub renorm: RenormConfig,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Return the lowest-validation-loss snapshot instead of the last one.
    pub restore_best: bool,
    /// Multiplier on the Glorot-uniform initialization bound.
    pub init_scale: f64,
    pub seed: u64,
}

impl HeadConfig {
    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: [512, 256, 128],
            num_classes,
            lambda: 1e-4,
            dropout_rate: 0.3,
            renorm: RenormConfig::default(),
            learning_rate: 0.01,
            batch_size: 32,
            max_epochs: 50,
            patience: 7,
            restore_best: true,
            init_scale: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(invalid!("layer dimensions must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(invalid!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid!("lambda must be nonnegative, got {}", self.lambda));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(invalid!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size < 2 {
            return Err(invalid!(
                "batch size must be at least 2 for batch renormalization"
            ));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(invalid!("init_scale must be positive"));
        }
        self.renorm.validate()
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> [usize; 5] {
        let [a, b, c] = self.hidden_dims;
        [self.input_dim, a, b, c, self.num_classes]
    }
}
