//! The classifier head: three `Dense(ReLU) → BatchRenorm → Dropout` blocks
//! followed by a `Dense(softmax)` output layer.
//!
//! The hidden dense layers carry an L1 penalty `λ·Σ|w|` on their weight
//! matrices; biases and the output layer are not penalized. Training is plain
//! minibatch gradient descent on `mean cross-entropy + L1`, with early
//! stopping on validation loss that restores the best snapshot.
//!
//! In the backward pass the batch-renorm corrections `r` and `d` are treated
//! as constants, the usual construction for batch renormalization.

mod config;
mod early_stop;
mod layers;
mod network;
mod train;

pub use config::{HeadConfig, RenormConfig};
pub use early_stop::{Decision, EarlyStopping};
pub use layers::{
    batch_renorm_forward, dense_forward, dropout_forward, Activation, BatchRenormLayer, DenseLayer,
    DropoutSpec, RenormCorrections,
};
pub use network::{
    ce_loss, head_backward, head_forward, l1_penalty, HeadGradients, HeadParams, TrainStep,
};
pub use train::{train_head, EpochMetrics, EpochRecord, StopReason, TrainingHistory};

use serde::{Deserialize, Serialize};

/// Whether layers use batch statistics and dropout (`Train`) or running
/// statistics and the identity (`Eval`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}
