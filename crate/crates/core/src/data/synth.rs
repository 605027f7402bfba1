use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Payload, Record};
use crate::ensemble::PredictionSet;
use crate::error::{invalid, Result};
use crate::numerics::{softmax_in_place, Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_samples: usize,
    pub num_classes: usize,
    /// One accuracy target per model, each in `(1/C, 1]`.
    pub targets: Vec<f64>,
    /// Logits are divided by this before the softmax.
    pub temperature: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(num_samples: usize, num_classes: usize, targets: Vec<f64>, seed: u64) -> Self {
        Self {
            num_samples,
            num_classes,
            targets,
            temperature: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 || self.targets.is_empty() {
            return Err(invalid!(
                "synth fixture needs at least one model and one sample"
            ));
        }
        if self.num_classes < 2 {
            return Err(invalid!("synth fixture needs at least 2 classes"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(invalid!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        let chance = 1.0 / self.num_classes as f64;
        for (m, &t) in self.targets.iter().enumerate() {
            if !(t > chance && t <= 1.0) {
                return Err(invalid!(
                    "model {m}: accuracy target {t} outside ({chance}, 1] for {} classes",
                    self.num_classes
                ));
            }
        }
        Ok(())
    }
}

/// Synthetic stand-in for a panel of backbone classifiers.
///
/// Each model gets exactly `round(target · N)` correct samples, chosen by
/// its own shuffle, so realized accuracy is within `0.5/N` of the target and
/// errors are independent across models. Wrong samples pick a uniform
/// wrong class. Noise logits are Gaussian; the chosen class is lifted above
/// the rest by a random margin before the tempered softmax.
pub fn synth_predictions(spec: &SynthSpec) -> Result<(PredictionSet, Vec<usize>)> {
    spec.validate()?;
    let (n, c) = (spec.num_samples, spec.num_classes);
    let mut root = SeededRng::new(spec.seed);
    let mut label_rng = root.fork();
    let labels: Vec<usize> = (0..n).map(|_| label_rng.below(c)).collect();

    let mut matrices = Vec::with_capacity(spec.targets.len());
    for &target in &spec.targets {
        let mut rng = root.fork();
        let correct_count = libm::round(target * n as f64) as usize;
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut correct = alloc::vec![false; n];
        for &i in &order[..correct_count] {
            correct[i] = true;
        }

        let mut values = Vec::with_capacity(n * c);
        for i in 0..n {
            let chosen = if correct[i] {
                labels[i]
            } else {
                let k = rng.below(c - 1);
                if k >= labels[i] {
                    k + 1
                } else {
                    k
                }
            };
            let mut row: Vec<f64> = (0..c).map(|_| rng.normal()).collect();
            let rest = (0..c)
                .filter(|&j| j != chosen)
                .map(|j| row[j])
                .fold(f64::NEG_INFINITY, f64::max);
            row[chosen] = rest + 1.0 + libm::fabs(rng.normal());
            for v in &mut row {
                *v /= spec.temperature;
            }
            softmax_in_place(&mut row)?;
            values.extend_from_slice(&row);
        }
        matrices.push(Matrix::new(n, c, values)?);
    }

    let model_names = (1..=spec.targets.len())
        .map(|m| format!("model_{m}"))
        .collect();
    let class_names = (0..c).map(|k| format!("class_{k}")).collect();
    Ok((
        PredictionSet::new(model_names, class_names, matrices)?,
        labels,
    ))
}

/// Gaussian class blobs: centers are `separation · N(0, I)`, samples add unit
/// noise. Labels cycle through the classes before a seeded shuffle, so
/// every class has at least `floor(n / C)` members.
pub fn synth_features(
    n: usize,
    num_classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    if n == 0 || num_classes == 0 || dim == 0 {
        return Err(invalid!(
            "synth features need positive sample count, classes and dimension"
        ));
    }
    let mut rng = SeededRng::new(seed);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..dim).map(|_| separation * rng.normal()).collect())
        .collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % num_classes).collect();
    rng.shuffle(&mut labels);
    let records = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| Record {
            id: format!("s{i:05}"),
            label,
            payload: Payload::Features(centers[label].iter().map(|&m| m + rng.normal()).collect()),
        })
        .collect();
    let class_names: Vec<String> = (0..num_classes).map(|k| format!("class_{k}")).collect();
    DatasetManifest::new(class_names, Some(dim), records)
}
