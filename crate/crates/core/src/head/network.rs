use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::HeadConfig;
use super::layers::{
    apply_mask, BatchRenormLayer, DenseLayer, DropoutSpec, RenormCache, RenormCorrections,
};
use super::Mode;
use crate::error::{invalid, Error, Result};
use crate::numerics::{matmul, matmul_at, softmax_in_place, Matrix, SeededRng};

const HIDDEN: usize = 3;
const LOG_FLOOR: f64 = 1e-12;

/// All learnable state of a head plus the configuration that built it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub config: HeadConfig,
    /// Three hidden layers, then the output layer.
    pub dense: Vec<DenseLayer>,
    pub renorm: Vec<BatchRenormLayer>,
}

/// Gradients shaped like [`HeadParams`]' trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    /// `(dW, db)` per dense layer.
    pub dense: Vec<(Matrix, Vec<f64>)>,
    /// `(dγ, dβ)` per renorm layer.
    pub renorm: Vec<(Vec<f64>, Vec<f64>)>,
}

impl HeadGradients {
    /// Same order as [`HeadParams::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.dense {
            out.extend_from_slice(w.values());
            out.extend_from_slice(b);
        }
        for (g, b) in &self.renorm {
            out.extend_from_slice(g);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Result of one train-mode forward/backward pass over a batch.
#[derive(Debug, Clone)]
pub struct TrainStep {
    /// Mean cross-entropy plus L1 penalty.
    pub loss: f64,
    pub probs: Matrix,
    pub gradients: HeadGradients,
    /// Corrections each renorm layer applied.
    pub corrections: Vec<RenormCorrections>,
    /// Running `(mean, var)` after the batch, per renorm layer.
    pub running: Vec<(Vec<f64>, Vec<f64>)>,
}

struct ForwardCache {
    /// Input of each dense layer.
    inputs: Vec<Matrix>,
    /// Pre-activation of each hidden dense layer.
    pre: Vec<Matrix>,
    renorm: Vec<RenormCache>,
    masks: Vec<Option<Matrix>>,
    running: Vec<(Vec<f64>, Vec<f64>)>,
}

impl HeadParams {
    /// Fresh parameters drawn from `SeededRng::new(config.seed)`.
    pub fn init(config: &HeadConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let widths = config.widths();
        let dense = (0..=HIDDEN)
            .map(|l| {
                let lambda = if l < HIDDEN { config.lambda } else { 0.0 };
                DenseLayer::init(
                    widths[l],
                    widths[l + 1],
                    lambda,
                    config.init_scale,
                    &mut rng,
                )
            })
            .collect();
        let renorm = (1..=HIDDEN)
            .map(|l| BatchRenormLayer::new(widths[l], config.renorm))
            .collect();
        Ok(Self {
            config: config.clone(),
            dense,
            renorm,
        })
    }

    /// Assembles parameters, checking that layer shapes chain from
    /// `input_dim` to `num_classes`.
    pub fn new(
        config: HeadConfig,
        dense: Vec<DenseLayer>,
        renorm: Vec<BatchRenormLayer>,
    ) -> Result<Self> {
        config.validate()?;
        if dense.len() != HIDDEN + 1 || renorm.len() != HIDDEN {
            return Err(invalid!(
                "head needs {} dense and {HIDDEN} renorm layers, got {} and {}",
                HIDDEN + 1,
                dense.len(),
                renorm.len()
            ));
        }
        let widths = config.widths();
        for (l, layer) in dense.iter().enumerate() {
            if layer.weights.shape() != (widths[l + 1], widths[l])
                || layer.bias.len() != widths[l + 1]
            {
                return Err(Error::ShapeMismatch {
                    op: "head dense layer",
                    left: (widths[l + 1], widths[l]),
                    right: layer.weights.shape(),
                });
            }
            if !layer.weights.all_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite {
                    what: "head dense layer",
                });
            }
        }
        for (l, layer) in renorm.iter().enumerate() {
            layer.validate()?;
            if layer.dim() != widths[l + 1] {
                return Err(Error::LengthMismatch {
                    what: "head renorm layer",
                    expected: widths[l + 1],
                    actual: layer.dim(),
                });
            }
        }
        Ok(Self {
            config,
            dense,
            renorm,
        })
    }

    fn dropout(&self) -> DropoutSpec {
        DropoutSpec {
            rate: self.config.dropout_rate,
        }
    }

    fn forward_impl(
        &self,
        x: &Matrix,
        mode: Mode,
        rng: &mut SeededRng,
        frozen: Option<&[RenormCorrections]>,
    ) -> Result<(Matrix, Option<ForwardCache>)> {
        if x.cols() != self.config.input_dim {
            return Err(Error::ShapeMismatch {
                op: "head input",
                left: x.shape(),
                right: (x.rows(), self.config.input_dim),
            });
        }
        let train = mode == Mode::Train;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(HIDDEN + 1),
            pre: Vec::with_capacity(HIDDEN),
            renorm: Vec::with_capacity(HIDDEN),
            masks: Vec::with_capacity(HIDDEN),
            running: Vec::with_capacity(HIDDEN),
        };
        let dropout = self.dropout();
        let mut h = x.clone();
        for l in 0..HIDDEN {
            let z = self.dense[l].affine(&h)?;
            let mut a = z.clone();
            a.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            let mut y = if train {
                let out = self.renorm[l].forward_train(&a, frozen.map(|f| &f[l]))?;
                cache.renorm.push(out.cache);
                cache.running.push((out.running_mean, out.running_var));
                out.y
            } else {
                self.renorm[l].forward_eval(&a)?
            };
            let mask = dropout.mask(y.rows(), y.cols(), mode, rng);
            if let Some(mask) = &mask {
                apply_mask(&mut y, mask);
            }
            if train {
                cache.inputs.push(h);
                cache.pre.push(z);
                cache.masks.push(mask);
            }
            h = y;
        }
        let mut probs = self.dense[HIDDEN].affine(&h)?;
        for r in 0..probs.rows() {
            softmax_in_place(probs.row_mut(r))?;
        }
        if train {
            cache.inputs.push(h);
            Ok((probs, Some(cache)))
        } else {
            Ok((probs, None))
        }
    }

    /// Train-mode objective with each renorm layer's corrections fixed to
    /// `frozen`. Its exact gradient is what [`head_backward`] returns.
    pub fn objective_with_corrections(
        &self,
        x: &Matrix,
        labels: &[usize],
        frozen: &[RenormCorrections],
        rng: &mut SeededRng,
    ) -> Result<f64> {
        if frozen.len() != HIDDEN {
            return Err(Error::LengthMismatch {
                what: "renorm corrections",
                expected: HIDDEN,
                actual: frozen.len(),
            });
        }
        let (probs, _) = self.forward_impl(x, Mode::Train, rng, Some(frozen))?;
        Ok(ce_loss(&probs, labels)? + l1_penalty(self))
    }

    /// `ce_loss + l1_penalty` of the forward pass in `mode`.
    pub fn objective(
        &self,
        x: &Matrix,
        labels: &[usize],
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<f64> {
        let (probs, _) = self.forward_impl(x, mode, rng, None)?;
        Ok(ce_loss(&probs, labels)? + l1_penalty(self))
    }

    /// Eval-mode class probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let mut unused = SeededRng::new(0);
        Ok(self.forward_impl(x, Mode::Eval, &mut unused, None)?.0)
    }

    /// Trainable parameters: per dense layer `W` then `b`, then per renorm
    /// layer `γ` then `β`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for d in &self.dense {
            out.extend_from_slice(d.weights.values());
            out.extend_from_slice(&d.bias);
        }
        for r in &self.renorm {
            out.extend_from_slice(&r.gamma);
            out.extend_from_slice(&r.beta);
        }
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.flat_params().len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "flat parameters",
                expected,
                actual: values.len(),
            });
        }
        let mut it = values.iter().copied();
        for d in &mut self.dense {
            d.weights
                .values_mut()
                .iter_mut()
                .for_each(|v| *v = it.next().unwrap());
            d.bias.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        for r in &mut self.renorm {
            r.gamma.iter_mut().for_each(|v| *v = it.next().unwrap());
            r.beta.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    /// One gradient-descent step: `θ ← θ − lr·∇θ`.
    pub fn apply_gradients(&mut self, grads: &HeadGradients, lr: f64) {
        for (layer, (dw, db)) in self.dense.iter_mut().zip(&grads.dense) {
            for (w, g) in layer.weights.values_mut().iter_mut().zip(dw.values()) {
                *w -= lr * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(db) {
                *b -= lr * g;
            }
        }
        for (layer, (dg, db)) in self.renorm.iter_mut().zip(&grads.renorm) {
            for (w, g) in layer.gamma.iter_mut().zip(dg) {
                *w -= lr * g;
            }
            for (b, g) in layer.beta.iter_mut().zip(db) {
                *b -= lr * g;
            }
        }
    }

    /// Installs running statistics produced by a train step.
    pub fn set_running(&mut self, running: &[(Vec<f64>, Vec<f64>)]) {
        for (layer, (mean, var)) in self.renorm.iter_mut().zip(running) {
            layer.running_mean.clone_from(mean);
            layer.running_var.clone_from(var);
        }
    }

    /// `Σ|w|` over the L1-regularized layers, without `λ`.
    pub fn regularized_weight_mass(&self) -> f64 {
        self.dense[..HIDDEN]
            .iter()
            .map(|d| d.weights.values().iter().map(|w| w.abs()).sum::<f64>())
            .sum()
    }
}

/// Class probabilities for a batch. Train mode draws dropout masks from
/// `rng`; the running statistics are not written back (see [`head_backward`]).
pub fn head_forward(
    params: &HeadParams,
    x: &Matrix,
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<Matrix> {
    Ok(params.forward_impl(x, mode, rng, None)?.0)
}

/// `Σ λ·Σ|w|` over the three hidden dense layers.
pub fn l1_penalty(params: &HeadParams) -> f64 {
    params.dense.iter().take(HIDDEN).map(DenseLayer::l1).sum()
}

/// Mean of `−ln max(p[true], 1e-12)` over the batch.
pub fn ce_loss(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: probs.rows(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty {
            what: "cross-entropy batch",
        });
    }
    let mut total = 0.0;
    for (row, &t) in probs.row_iter().zip(labels) {
        let p = *row.get(t).ok_or(Error::LabelOutOfRange {
            label: t,
            num_classes: probs.cols(),
        })?;
        total -= libm::log(p.max(LOG_FLOOR));
    }
    Ok(total / labels.len() as f64)
}

#[inline]
fn l1_subgradient(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}

/// Train-mode forward pass over `(x, labels)` followed by analytic
/// gradients of `ce_loss + l1_penalty`.
pub fn head_backward(
    params: &HeadParams,
    x: &Matrix,
    labels: &[usize],
    rng: &mut SeededRng,
) -> Result<TrainStep> {
    let (probs, cache) = params.forward_impl(x, Mode::Train, rng, None)?;
    let cache = cache.expect("train forward records intermediates");
    let loss = ce_loss(&probs, labels)? + l1_penalty(params);

    let batch = labels.len() as f64;
    let mut upstream = probs.clone();
    for (r, &t) in labels.iter().enumerate() {
        let row = upstream.row_mut(r);
        row[t] -= 1.0;
        row.iter_mut().for_each(|v| *v /= batch);
    }

    let mut dense_grads = vec![(Matrix::zeros(0, 0), Vec::new()); HIDDEN + 1];
    let mut renorm_grads = vec![(Vec::new(), Vec::new()); HIDDEN];

    let out_layer = &params.dense[HIDDEN];
    dense_grads[HIDDEN] = (
        matmul_at(&upstream, &cache.inputs[HIDDEN])?,
        column_sums(&upstream),
    );
    let mut dh = matmul(&upstream, &out_layer.weights)?;

    for l in (0..HIDDEN).rev() {
        if let Some(mask) = &cache.masks[l] {
            apply_mask(&mut dh, mask);
        }
        let (mut dz, d_gamma, d_beta) = params.renorm[l].backward(&dh, &cache.renorm[l]);
        renorm_grads[l] = (d_gamma, d_beta);
        for (g, z) in dz.values_mut().iter_mut().zip(cache.pre[l].values()) {
            if *z <= 0.0 {
                *g = 0.0;
            }
        }
        let layer = &params.dense[l];
        let mut dw = matmul_at(&dz, &cache.inputs[l])?;
        if layer.lambda > 0.0 {
            for (g, w) in dw.values_mut().iter_mut().zip(layer.weights.values()) {
                *g += layer.lambda * l1_subgradient(*w);
            }
        }
        dense_grads[l] = (dw, column_sums(&dz));
        if l > 0 {
            dh = matmul(&dz, &layer.weights)?;
        }
    }

    Ok(TrainStep {
        loss,
        probs,
        gradients: HeadGradients {
            dense: dense_grads,
            renorm: renorm_grads,
        },
        corrections: cache.renorm.into_iter().map(|c| c.corrections).collect(),
        running: cache.running,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::head::RenormConfig;

    fn small_config(seed: u64) -> HeadConfig {
        HeadConfig {
            hidden_dims: [6, 5, 4],
            dropout_rate: 0.0,
            seed,
            ..HeadConfig::new(4, 3)
        }
    }

    fn batch(seed: u64, rows: usize, cols: usize, classes: usize) -> (Matrix, Vec<usize>) {
        let mut rng = SeededRng::new(seed ^ 0xABCD);
        let x = Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap();
        let labels = (0..rows).map(|_| rng.below(classes)).collect();
        (x, labels)
    }

    #[test]
    fn outputs_are_distributions_and_eval_is_deterministic() {
        let params = HeadParams::init(&small_config(3)).unwrap();
        let (x, _) = batch(3, 10, 4, 3);
        let p1 = params.predict_proba(&x).unwrap();
        let p2 = params.predict_proba(&x).unwrap();
        assert_eq!(p1, p2);
        for row in p1.row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let mut rng = SeededRng::new(1);
        let pt = head_forward(&params, &x, Mode::Train, &mut rng).unwrap();
        for row in pt.row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_init_is_near_uniform() {
        for c in [2usize, 3, 5] {
            let cfg = HeadConfig {
                init_scale: 0.1,
                hidden_dims: [32, 16, 8],
                ..HeadConfig::new(6, c)
            };
            let params = HeadParams::init(&cfg).unwrap();
            let (x, _) = batch(11, 20, 6, c);
            let p = params.predict_proba(&x).unwrap();
            assert!(p.values().iter().all(|v| (v - 1.0 / c as f64).abs() < 0.25));
        }
    }

    #[test]
    fn ce_loss_cases() {
        let onehot = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(ce_loss(&onehot, &[0, 1]).unwrap().abs() < 1e-15);
        let uniform = Matrix::from_rows(&[[0.25; 4]]).unwrap();
        assert!((ce_loss(&uniform, &[2]).unwrap() - libm::log(4.0)).abs() < 1e-15);
        let p = Matrix::from_rows(&[[0.25, 0.75]]).unwrap();
        assert!((ce_loss(&p, &[1]).unwrap() - 0.287_682_072_451_780_9).abs() < 1e-12);
        assert!(ce_loss(&p, &[2]).is_err());
        // floor keeps zero probabilities finite
        assert!((ce_loss(&onehot, &[1, 0]).unwrap() - 27.631_021_115_928_547).abs() < 1e-9);
    }

    #[test]
    fn l1_penalty_cases() {
        let mut params = HeadParams::init(&HeadConfig {
            lambda: 0.0,
            ..small_config(0)
        })
        .unwrap();
        assert_eq!(l1_penalty(&params), 0.0);
        params.dense.iter_mut().for_each(|d| d.lambda = 1e-4);
        params
            .dense
            .iter_mut()
            .for_each(|d| d.weights.values_mut().fill(0.0));
        assert_eq!(l1_penalty(&params), 0.0);

        let layer = DenseLayer::new(
            Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.0]]).unwrap(),
            vec![5.0, 5.0],
            1e-4,
        )
        .unwrap();
        assert!((layer.l1() - 0.0006).abs() < 1e-15);
        // output layer and biases do not count
        params.dense[3].weights.values_mut().fill(7.0);
        params.dense[0].bias.fill(9.0);
        assert_eq!(l1_penalty(&params), 0.0);
    }

    #[test]
    fn lambda_zero_matches_pure_cross_entropy() {
        let cfg = HeadConfig {
            lambda: 0.0,
            ..small_config(5)
        };
        let params = HeadParams::init(&cfg).unwrap();
        let (x, y) = batch(5, 8, 4, 3);
        let step = head_backward(&params, &x, &y, &mut SeededRng::new(0)).unwrap();
        let ce = ce_loss(&step.probs, &y).unwrap();
        assert_eq!(step.loss, ce);

        let with = HeadParams::init(&HeadConfig {
            lambda: 0.5,
            ..cfg.clone()
        })
        .unwrap();
        let step_l1 = head_backward(&with, &x, &y, &mut SeededRng::new(0)).unwrap();
        // identical weights (same seed), so gradients differ only by λ·sign(W)
        for l in 0..3 {
            for ((g0, g1), w) in step.gradients.dense[l]
                .0
                .values()
                .iter()
                .zip(step_l1.gradients.dense[l].0.values())
                .zip(params.dense[l].weights.values())
            {
                assert!((g1 - g0 - 0.5 * l1_subgradient(*w)).abs() < 1e-12);
            }
        }
        assert_eq!(step.gradients.dense[3], step_l1.gradients.dense[3]);
    }

    #[test]
    fn duplicating_the_batch_keeps_gradients() {
        let params = HeadParams::init(&small_config(9)).unwrap();
        let (x, y) = batch(9, 6, 4, 3);
        let mut rows: Vec<Vec<f64>> = x.row_iter().map(<[f64]>::to_vec).collect();
        rows.extend(x.row_iter().map(<[f64]>::to_vec));
        let x2 = Matrix::from_rows(&rows).unwrap();
        let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
        let g1 = head_backward(&params, &x, &y, &mut SeededRng::new(0))
            .unwrap()
            .gradients
            .flatten();
        let g2 = head_backward(&params, &x2, &y2, &mut SeededRng::new(0))
            .unwrap()
            .gradients
            .flatten();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn renorm_in_plain_mode_keeps_params_stationary_in_train_output() {
        let cfg = HeadConfig {
            renorm: RenormConfig::plain_batch_norm(),
            ..small_config(2)
        };
        let mut params = HeadParams::init(&cfg).unwrap();
        let (x, y) = batch(2, 8, 4, 3);
        let before = params
            .objective(&x, &y, Mode::Train, &mut SeededRng::new(0))
            .unwrap();
        let step = head_backward(&params, &x, &y, &mut SeededRng::new(0)).unwrap();
        params.set_running(&step.running);
        let after = params
            .objective(&x, &y, Mode::Train, &mut SeededRng::new(0))
            .unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let cfg = small_config(0);
        let p = HeadParams::init(&cfg).unwrap();
        let mut dense = p.dense.clone();
        dense.swap(0, 1);
        assert!(HeadParams::new(cfg.clone(), dense, p.renorm.clone()).is_err());
        assert!(HeadParams::new(cfg.clone(), p.dense.clone(), p.renorm[..2].to_vec()).is_err());
        assert!(p.predict_proba(&Matrix::zeros(2, 5)).is_err());
        assert!(HeadParams::new(cfg, p.dense.clone(), p.renorm.clone()).is_ok());
    }
}
