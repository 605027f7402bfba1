use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::HeadConfig;
use super::early_stop::{Decision, EarlyStopping};
use super::network::{ce_loss, head_backward, l1_penalty, HeadParams};
use crate::error::{invalid, Error, Result};
use crate::metrics::{confusion, macro_average, mean_squared_error, per_class_metrics};
use crate::numerics::{argmax_unchecked, Matrix, SeededRng};

/// Eval-mode metrics of one split after an epoch. Rates are fractions in
/// `[0, 1]`; precision and recall are macro averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// Cross-entropy plus L1 penalty.
    pub loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Mean squared error between one-hot targets and probabilities.
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: EpochMetrics,
    pub validation: EpochMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopped,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned; 0 when no epoch ran.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

fn check_split(what: &'static str, x: &Matrix, y: &[usize], config: &HeadConfig) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Empty { what });
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            what,
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.cols() != config.input_dim {
        return Err(Error::ShapeMismatch {
            op: what,
            left: x.shape(),
            right: (x.rows(), config.input_dim),
        });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= config.num_classes) {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: config.num_classes,
        });
    }
    Ok(())
}

pub(crate) fn epoch_metrics(params: &HeadParams, x: &Matrix, y: &[usize]) -> Result<EpochMetrics> {
    let probs = params.predict_proba(x)?;
    let predicted: Vec<usize> = probs.row_iter().map(argmax_unchecked).collect();
    let cm = confusion(y, &predicted, params.config.num_classes)?;
    let avg = macro_average(&per_class_metrics(&cm));
    Ok(EpochMetrics {
        loss: ce_loss(&probs, y)? + l1_penalty(params),
        accuracy: cm.trace() as f64 / cm.total() as f64,
        precision: avg.precision / 100.0,
        recall: avg.recall / 100.0,
        mse: mean_squared_error(&probs, y)?,
    })
}

/// Minibatch boundaries over `n` shuffled samples. A trailing batch of one
/// sample joins the previous batch, since batch statistics need two rows.
fn batch_ranges(n: usize, batch_size: usize) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = (start + batch_size).min(n);
        if n - end == 1 {
            end = n;
        }
        ranges.push((start, end));
        start = end;
    }
    ranges
}

/// Trains a freshly initialized head by minibatch gradient descent.
///
/// After each epoch the validation loss feeds [`EarlyStopping`]; the
/// returned parameters are the snapshot with the lowest validation loss
/// unless `restore_best` is off.
pub fn train_head(
    config: &HeadConfig,
    train_x: &Matrix,
    train_y: &[usize],
    val_x: &Matrix,
    val_y: &[usize],
) -> Result<(HeadParams, TrainingHistory)> {
    config.validate()?;
    check_split("training set", train_x, train_y, config)?;
    check_split("validation set", val_x, val_y, config)?;
    if train_y.len() < 2 {
        return Err(invalid!(
            "training set needs at least 2 samples for batch statistics"
        ));
    }

    let mut params = HeadParams::init(config)?;
    // separate stream from initialization
    let mut rng = SeededRng::new(config.seed).fork();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut records = Vec::new();
    let mut order: Vec<usize> = (0..train_y.len()).collect();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        for (start, end) in batch_ranges(order.len(), config.batch_size) {
            let idx = &order[start..end];
            let xb = train_x.select_rows(idx);
            let yb: Vec<usize> = idx.iter().map(|&i| train_y[i]).collect();
            let step = head_backward(&params, &xb, &yb, &mut rng)?;
            if !step.loss.is_finite() {
                return Err(invalid!("training loss became non-finite at epoch {epoch}"));
            }
            params.apply_gradients(&step.gradients, config.learning_rate);
            params.set_running(&step.running);
        }
        let record = EpochRecord {
            epoch,
            train: epoch_metrics(&params, train_x, train_y)?,
            validation: epoch_metrics(&params, val_x, val_y)?,
        };
        records.push(record);
        if stopper.update(record.validation.loss, &params)? == Decision::Stop {
            stop_reason = StopReason::EarlyStopped;
            break;
        }
    }

    let best_epoch = stopper.best_epoch().unwrap_or(0);
    let returned = match stopper.into_best() {
        Some(best) if config.restore_best => best,
        _ => params,
    };
    Ok((
        returned,
        TrainingHistory {
            epochs: records,
            best_epoch,
            stop_reason,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_never_leave_a_single_row() {
        assert_eq!(batch_ranges(10, 3), [(0, 3), (3, 6), (6, 10)]);
        assert_eq!(batch_ranges(9, 3), [(0, 3), (3, 6), (6, 9)]);
        assert_eq!(batch_ranges(3, 32), [(0, 3)]);
        assert_eq!(batch_ranges(33, 32), [(0, 33)]);
    }

    fn blobs(seed: u64, n: usize) -> (Matrix, Vec<usize>) {
        let mut rng = SeededRng::new(seed);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let center = if c == 0 { -1.5 } else { 1.5 };
            values.push(center + 0.5 * rng.normal());
            values.push(center + 0.5 * rng.normal());
            labels.push(c);
        }
        (Matrix::new(n, 2, values).unwrap(), labels)
    }

    fn toy_config() -> HeadConfig {
        HeadConfig {
            hidden_dims: [8, 8, 8],
            batch_size: 8,
            max_epochs: 12,
            learning_rate: 0.05,
            ..HeadConfig::new(2, 2)
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = blobs(1, 24);
        let (vx, vy) = blobs(2, 8);
        let a = train_head(&toy_config(), &x, &y, &vx, &vy).unwrap();
        let b = train_head(&toy_config(), &x, &y, &vx, &vy).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn returned_params_have_the_minimum_validation_loss() {
        let (x, y) = blobs(3, 24);
        let (vx, vy) = blobs(4, 8);
        let (params, history) = train_head(&toy_config(), &x, &y, &vx, &vy).unwrap();
        let min = history
            .epochs
            .iter()
            .map(|e| e.validation.loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(history.epochs[history.best_epoch - 1].validation.loss, min);
        assert_eq!(epoch_metrics(&params, &vx, &vy).unwrap().loss, min);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let (x, y) = blobs(1, 6);
        let cfg = toy_config();
        assert!(train_head(&cfg, &x, &y, &Matrix::zeros(0, 2), &[]).is_err());
        assert!(train_head(&cfg, &x.select_rows(&[0]), &y[..1], &x, &y).is_err());
        assert!(train_head(&cfg, &x, &[0, 1, 0, 1, 0, 5], &x, &y).is_err());
    }
}
