use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::RenormConfig;
use super::Mode;
use crate::error::{invalid, Error, Result};
use crate::numerics::{matmul_bt, softmax_in_place, Matrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
    Softmax,
}

/// Fully connected layer, `y = act(x·Wᵀ + b)` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// L1 coefficient on `weights`.
    pub lambda: f64,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, lambda: f64) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::LengthMismatch {
                what: "dense bias",
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid!("lambda must be nonnegative, got {lambda}"));
        }
        if !weights.all_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite {
                what: "dense layer",
            });
        }
        Ok(Self {
            weights,
            bias,
            lambda,
        })
    }

    /// Glorot-uniform weights in `±scale·√(6 / (in + out))`, zero bias.
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        lambda: f64,
        scale: f64,
        rng: &mut SeededRng,
    ) -> Self {
        let bound = scale * libm::sqrt(6.0 / (in_dim + out_dim) as f64);
        let values = (0..in_dim * out_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            weights: Matrix::from_raw(out_dim, in_dim, values),
            bias: vec![0.0; out_dim],
            lambda,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// `λ·Σ|w|`.
    pub fn l1(&self) -> f64 {
        self.lambda * self.weights.values().iter().map(|w| w.abs()).sum::<f64>()
    }

    /// Pre-activation `x·Wᵀ + b`.
    pub(crate) fn affine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                op: "dense",
                left: x.shape(),
                right: self.weights.shape(),
            });
        }
        let mut z = matmul_bt(x, &self.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }
}

pub fn dense_forward(layer: &DenseLayer, x: &Matrix, activation: Activation) -> Result<Matrix> {
    let mut z = layer.affine(x)?;
    match activation {
        Activation::None => {}
        Activation::Relu => z.values_mut().iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Softmax => {
            for r in 0..z.rows() {
                softmax_in_place(z.row_mut(r))?;
            }
        }
    }
    Ok(z)
}

/// Batch renormalization over the feature columns of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRenormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub config: RenormConfig,
}

/// Per-feature correction factors applied in train mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormCorrections {
    pub r: Vec<f64>,
    pub d: Vec<f64>,
}

/// What the backward pass needs from a train-mode forward.
#[derive(Debug, Clone)]
pub(crate) struct RenormCache {
    pub x_hat: Matrix,
    /// `√(σ²_B + ε)` per feature.
    pub sigma: Vec<f64>,
    pub corrections: RenormCorrections,
}

pub(crate) struct RenormTrainOutput {
    pub y: Matrix,
    pub cache: RenormCache,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchRenormLayer {
    /// γ = 1, β = 0, running mean 0 and variance 1.
    pub fn new(dim: usize, config: RenormConfig) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let d = self.dim();
        for (what, v) in [
            ("renorm beta", &self.beta),
            ("renorm running mean", &self.running_mean),
            ("renorm running variance", &self.running_var),
        ] {
            if v.len() != d {
                return Err(Error::LengthMismatch {
                    what,
                    expected: d,
                    actual: v.len(),
                });
            }
        }
        if self.running_var.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(invalid!("renorm running variance must be nonnegative"));
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(Error::ShapeMismatch {
                op: "batch renorm",
                left: x.shape(),
                right: (1, self.dim()),
            });
        }
        Ok(())
    }

    /// Normalizes with running statistics; `r = 1`, `d = 0`.
    pub(crate) fn forward_eval(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let eps = self.config.epsilon;
        let mut y = x.clone();
        for r in 0..y.rows() {
            for (j, v) in y.row_mut(r).iter_mut().enumerate() {
                let sigma = libm::sqrt(self.running_var[j] + eps);
                let x_hat = (*v - self.running_mean[j]) / sigma;
                *v = self.gamma[j] * x_hat + self.beta[j];
            }
        }
        Ok(y)
    }

    /// Batch statistics with clipped corrections. `frozen` replaces the
    /// computed `r`, `d`.
    pub(crate) fn forward_train(
        &self,
        x: &Matrix,
        frozen: Option<&RenormCorrections>,
    ) -> Result<RenormTrainOutput> {
        self.check_input(x)?;
        let m = x.rows();
        if m < 2 {
            return Err(invalid!(
                "batch renorm in train mode needs a batch of at least 2, got {m}"
            ));
        }
        let (dim, eps) = (self.dim(), self.config.epsilon);
        let (r_max, d_max) = (self.config.r_max, self.config.d_max);
        let mut mean = vec![0.0; dim];
        for row in x.row_iter() {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= m as f64);
        let mut var = vec![0.0; dim];
        for row in x.row_iter() {
            for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        var.iter_mut().for_each(|v| *v /= m as f64);
        let sigma: Vec<f64> = var.iter().map(|v| libm::sqrt(v + eps)).collect();

        let corrections = match frozen {
            Some(c) => c.clone(),
            None => {
                let mut r = vec![0.0; dim];
                let mut d = vec![0.0; dim];
                for j in 0..dim {
                    let sigma_run = libm::sqrt(self.running_var[j] + eps);
                    r[j] = (sigma[j] / sigma_run).clamp(1.0 / r_max, r_max);
                    d[j] = ((mean[j] - self.running_mean[j]) / sigma_run).clamp(-d_max, d_max);
                }
                RenormCorrections { r, d }
            }
        };

        let mut x_hat = x.clone();
        let mut y = x.clone();
        for i in 0..m {
            for j in 0..dim {
                let xh = (x.get(i, j) - mean[j]) / sigma[j];
                x_hat.set(i, j, xh);
                y.set(
                    i,
                    j,
                    self.gamma[j] * (corrections.r[j] * xh + corrections.d[j]) + self.beta[j],
                );
            }
        }

        let mom = self.config.momentum;
        let running_mean = self
            .running_mean
            .iter()
            .zip(&mean)
            .map(|(run, b)| mom * run + (1.0 - mom) * b)
            .collect();
        let running_var = self
            .running_var
            .iter()
            .zip(&var)
            .map(|(run, b)| mom * run + (1.0 - mom) * b)
            .collect();

        Ok(RenormTrainOutput {
            y,
            cache: RenormCache {
                x_hat,
                sigma,
                corrections,
            },
            running_mean,
            running_var,
        })
    }

    /// Returns `(dx, dγ, dβ)` with `r`, `d` held constant.
    pub(crate) fn backward(
        &self,
        dy: &Matrix,
        cache: &RenormCache,
    ) -> (Matrix, Vec<f64>, Vec<f64>) {
        let (m, dim) = dy.shape();
        let RenormCorrections { r, d } = &cache.corrections;
        let mut d_gamma = vec![0.0; dim];
        let mut d_beta = vec![0.0; dim];
        let mut sum_dxh = vec![0.0; dim];
        let mut sum_dxh_xh = vec![0.0; dim];
        let mut dx_hat = Matrix::zeros(m, dim);
        for i in 0..m {
            for j in 0..dim {
                let g = dy.get(i, j);
                let xh = cache.x_hat.get(i, j);
                d_gamma[j] += g * (r[j] * xh + d[j]);
                d_beta[j] += g;
                let dxh = g * self.gamma[j] * r[j];
                dx_hat.set(i, j, dxh);
                sum_dxh[j] += dxh;
                sum_dxh_xh[j] += dxh * xh;
            }
        }
        let mut dx = dx_hat;
        let mf = m as f64;
        for i in 0..m {
            for j in 0..dim {
                let xh = cache.x_hat.get(i, j);
                let v =
                    (mf * dx.get(i, j) - sum_dxh[j] - xh * sum_dxh_xh[j]) / (mf * cache.sigma[j]);
                dx.set(i, j, v);
            }
        }
        (dx, d_gamma, d_beta)
    }
}

/// Train mode returns the output and the layer with updated running
/// statistics; eval mode returns the layer unchanged.
pub fn batch_renorm_forward(
    layer: &BatchRenormLayer,
    x: &Matrix,
    mode: Mode,
) -> Result<(Matrix, BatchRenormLayer)> {
    match mode {
        Mode::Eval => Ok((layer.forward_eval(x)?, layer.clone())),
        Mode::Train => {
            let out = layer.forward_train(x, None)?;
            let mut updated = layer.clone();
            updated.running_mean = out.running_mean;
            updated.running_var = out.running_var;
            Ok((out.y, updated))
        }
    }
}

/// Inverted dropout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub rate: f64,
}

impl Default for DropoutSpec {
    fn default() -> Self {
        Self { rate: 0.3 }
    }
}

impl DropoutSpec {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(invalid!("dropout rate must be in [0, 1), got {rate}"));
        }
        Ok(Self { rate })
    }

    /// Per-entry multipliers: 0 for dropped, `1/(1 − rate)` for kept.
    /// `None` when nothing can be dropped.
    pub(crate) fn mask(
        &self,
        rows: usize,
        cols: usize,
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Option<Matrix> {
        if mode == Mode::Eval || self.rate == 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - self.rate);
        let values = (0..rows * cols)
            .map(|_| if rng.bernoulli(self.rate) { 0.0 } else { keep })
            .collect();
        Some(Matrix::from_raw(rows, cols, values))
    }
}

pub(crate) fn apply_mask(x: &mut Matrix, mask: &Matrix) {
    for (v, k) in x.values_mut().iter_mut().zip(mask.values()) {
        *v *= k;
    }
}

pub fn dropout_forward(spec: &DropoutSpec, x: &Matrix, mode: Mode, rng: &mut SeededRng) -> Matrix {
    let mut y = x.clone();
    if let Some(mask) = spec.mask(x.rows(), x.cols(), mode, rng) {
        apply_mask(&mut y, &mask);
    }
    y
}
