use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::error::{invalid, Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

/// `floor(fraction · count)`, tolerant of products like `0.7 · 10` landing
/// a hair below an integer.
fn train_count(fraction: f64, count: usize) -> usize {
    libm::floor(fraction * count as f64 + 1e-9) as usize
}

/// Seeded split of sample positions into `(train, test)`.
///
/// Stratified: each class (in class order) is shuffled and its first
/// `floor(fraction · count)` members go to train. Both outputs are then
/// shuffled again.
pub fn split_indices(
    labels: &[usize],
    num_classes: usize,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(invalid!(
            "train fraction must be in (0, 1), got {}",
            spec.train_fraction
        ));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::LabelOutOfRange { label, num_classes });
    }
    let mut rng = SeededRng::new(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if spec.stratified {
        for class in 0..num_classes {
            let mut members: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.len() < 2 {
                return Err(invalid!(
                    "class {class} has {} sample(s); stratified splitting needs at least 2",
                    members.len()
                ));
            }
            rng.shuffle(&mut members);
            let k = train_count(spec.train_fraction, members.len());
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        rng.shuffle(&mut all);
        let k = train_count(spec.train_fraction, all.len());
        test = all.split_off(k);
        train = all;
    }
    rng.shuffle(&mut train);
    rng.shuffle(&mut test);
    Ok((train, test))
}

pub fn split_dataset(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<(DatasetManifest, DatasetManifest)> {
    let (train, test) = split_indices(&manifest.labels(), manifest.class_names.len(), spec)?;
    Ok((manifest.subset(&train), manifest.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn exact_floor_counts() {
        let (tr, te) = split_indices(&[0; 10], 1, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        let (tr, te) = split_indices(&[0; 520], 1, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (364, 156));
    }

    #[test]
    fn seed_controls_the_split() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let a = split_indices(&labels, 3, &SplitSpec::default()).unwrap();
        let b = split_indices(&labels, 3, &SplitSpec::default()).unwrap();
        assert_eq!(a, b);
        let c = split_indices(
            &labels,
            3,
            &SplitSpec {
                seed: 1,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_class_is_rejected() {
        assert!(split_indices(&[0, 0, 1], 2, &SplitSpec::default()).is_err());
        let unstratified = SplitSpec {
            stratified: false,
            ..SplitSpec::default()
        };
        assert!(split_indices(&[0, 0, 1], 2, &unstratified).is_ok());
        assert!(split_indices(
            &[0, 0],
            1,
            &SplitSpec {
                train_fraction: 1.0,
                ..SplitSpec::default()
            }
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn disjoint_exhaustive_and_floor_exact(
            counts in proptest::collection::vec(2usize..40, 1..5),
            fraction in 0.05f64..0.95,
            seed in 0u64..1000,
        ) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
            let spec = SplitSpec { train_fraction: fraction, seed, stratified: true };
            let (train, test) = split_indices(&labels, counts.len(), &spec).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (c, &n) in counts.iter().enumerate() {
                let in_train = train.iter().filter(|&&i| labels[i] == c).count();
                prop_assert_eq!(in_train, train_count(fraction, n));
            }
        }
    }
}
