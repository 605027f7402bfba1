use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::predictions::WeightVector;
use crate::error::{invalid, Result};

/// Which weight vectors the grid search visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LatticeMode {
    /// Entries on the step grid summing to one.
    Simplex,
    /// Every entry independently in `{0, step, …, max}`; the all-zero vector
    /// is skipped.
    Box { max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub mode: LatticeMode,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 0.1,
            mode: LatticeMode::Simplex,
        }
    }
}

impl GridSpec {
    pub fn simplex(step: f64) -> Self {
        Self {
            step,
            mode: LatticeMode::Simplex,
        }
    }

    pub fn unconstrained(step: f64, max: f64) -> Self {
        Self {
            step,
            mode: LatticeMode::Box { max },
        }
    }

    /// Grid points per unit weight, i.e. `1 / step`, when it is integral.
    pub fn units(&self) -> Result<u32> {
        integral_ratio(1.0, self.step)
            .ok_or_else(|| invalid!("1/step must be a positive integer (step = {})", self.step))
    }
}

fn integral_ratio(num: f64, step: f64) -> Option<u32> {
    if !(step.is_finite() && step > 0.0 && num.is_finite() && num >= 0.0) {
        return None;
    }
    let r = num / step;
    let k = libm::round(r);
    ((r - k).abs() < 1e-9 && k <= u32::MAX as f64).then_some(k as u32)
}

/// A closed weight lattice, walked in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    models: usize,
    units: u32,
    box_max: Option<u32>,
}

impl Lattice {
    pub fn new(models: usize, spec: &GridSpec) -> Result<Self> {
        if models == 0 {
            return Err(invalid!("weight lattice needs at least one model"));
        }
        let units = spec.units()?;
        if units == 0 {
            return Err(invalid!("step {} is larger than one", spec.step));
        }
        let box_max = match spec.mode {
            LatticeMode::Simplex => None,
            LatticeMode::Box { max } => {
                let k = integral_ratio(max, spec.step)
                    .filter(|&k| k > 0)
                    .ok_or_else(|| {
                        invalid!(
                            "box max {max} must be a positive multiple of step {}",
                            spec.step
                        )
                    })?;
                Some(k)
            }
        };
        Ok(Self {
            models,
            units,
            box_max,
        })
    }

    pub fn models(&self) -> usize {
        self.models
    }

    /// Number of lattice points.
    pub fn len(&self) -> u128 {
        match self.box_max {
            None => binomial(
                self.units as u64 + self.models as u64 - 1,
                self.models as u64 - 1,
            ),
            Some(k) => (k as u128 + 1).pow(self.models as u32) - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight value of `k` grid steps.
    #[inline]
    pub fn weight_of(&self, k: u32) -> f64 {
        k as f64 / self.units as f64
    }

    pub fn weights_of(&self, counts: &[u32]) -> Vec<f64> {
        counts.iter().map(|&k| self.weight_of(k)).collect()
    }

    /// Visits every point's grid counts in lexicographic order.
    pub fn for_each_counts(&self, mut visit: impl FnMut(&[u32])) {
        let m = self.models;
        let mut c = vec![0u32; m];
        match self.box_max {
            None => {
                // The last coordinate is implied by the prefix sum.
                let k = self.units;
                let mut prefix_sum = 0u32;
                loop {
                    c[m - 1] = k - prefix_sum;
                    visit(&c);
                    let mut i = m - 1;
                    loop {
                        if i == 0 {
                            return;
                        }
                        i -= 1;
                        if prefix_sum < k {
                            c[i] += 1;
                            prefix_sum += 1;
                            break;
                        }
                        prefix_sum -= c[i];
                        c[i] = 0;
                    }
                }
            }
            Some(max) => loop {
                let mut i = m;
                loop {
                    if i == 0 {
                        return;
                    }
                    i -= 1;
                    if c[i] < max {
                        c[i] += 1;
                        break;
                    }
                    c[i] = 0;
                }
                visit(&c);
            },
        }
    }
}

/// All lattice vectors in lexicographic order.
pub fn enumerate_weight_lattice(models: usize, spec: &GridSpec) -> Result<Vec<WeightVector>> {
    let lattice = Lattice::new(models, spec)?;
    let mut out = Vec::new();
    let mut err = None;
    lattice.for_each_counts(
        |counts| match WeightVector::new(lattice.weights_of(counts)) {
            Ok(w) => out.push(w),
            Err(e) => err = Some(e),
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-element subsets of `0..m` in lexicographic order.
pub fn enumerate_subsets(m: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > m {
        return Err(invalid!("subset size {k} must be in 1..={m}"));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return Ok(out);
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(enumerate_subsets(7, 2).unwrap().len(), 21);
        let total: usize = (2..=7)
            .map(|k| enumerate_subsets(7, k).unwrap().len())
            .sum();
        assert_eq!(total, 120);
        assert_eq!(enumerate_subsets(3, 3).unwrap(), vec![vec![0, 1, 2]]);
        assert_eq!(
            enumerate_subsets(4, 2).unwrap()[..3],
            [vec![0, 1], vec![0, 2], vec![0, 3]]
        );
        assert!(enumerate_subsets(3, 0).is_err());
        assert!(enumerate_subsets(3, 4).is_err());
    }

    #[test]
    fn small_simplex_lattice() {
        let got: Vec<Vec<f64>> = enumerate_weight_lattice(2, &GridSpec::simplex(0.5))
            .unwrap()
            .into_iter()
            .map(Vec::from)
            .collect();
        assert_eq!(got, vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        let one: Vec<Vec<f64>> = enumerate_weight_lattice(1, &GridSpec::simplex(0.2))
            .unwrap()
            .into_iter()
            .map(Vec::from)
            .collect();
        assert_eq!(one, vec![vec![1.0]]);
    }

    #[test]
    fn seven_model_simplex_count() {
        let lattice = Lattice::new(7, &GridSpec::default()).unwrap();
        assert_eq!(lattice.len(), 8008);
        let all = enumerate_weight_lattice(7, &GridSpec::default()).unwrap();
        assert_eq!(all.len(), 8008);
        assert!(all.iter().all(|w| (w.sum() - 1.0).abs() < 1e-9));
        assert!(all.windows(2).all(|p| p[0].as_slice() < p[1].as_slice()));
    }

    #[test]
    fn box_mode_matches_odometer() {
        let spec = GridSpec::unconstrained(0.1, 0.4);
        let lattice = Lattice::new(7, &spec).unwrap();
        assert_eq!(lattice.len(), 5u128.pow(7) - 1);
        let mut seen = Vec::new();
        lattice.for_each_counts(|c| seen.push(c.to_vec()));
        assert_eq!(seen.len() as u128, lattice.len());
        // base-5 digit i of the point's position in the full box
        let pos = 5500;
        let digits: Vec<u32> = (0..7).rev().map(|i| (pos / 5u32.pow(i)) % 5).collect();
        assert_eq!(digits, [0, 1, 3, 4, 0, 0, 0]);
        assert_eq!(seen[pos as usize - 1], digits);
    }

    #[test]
    fn step_must_close() {
        assert!(Lattice::new(3, &GridSpec::simplex(0.3)).is_err());
        assert!(Lattice::new(3, &GridSpec::simplex(0.0)).is_err());
        assert!(Lattice::new(3, &GridSpec::simplex(2.0)).is_err());
        assert!(Lattice::new(3, &GridSpec::unconstrained(0.1, 0.45)).is_err());
        assert!(Lattice::new(0, &GridSpec::default()).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(16, 6), 8008);
        assert_eq!(binomial(7, 2), 21);
        assert_eq!(binomial(3, 5), 0);
    }

    proptest::proptest! {
        #[test]
        fn simplex_count_matches_stars_and_bars(m in 1usize..6, units in 1u32..9) {
            let spec = GridSpec::simplex(1.0 / units as f64);
            let all = enumerate_weight_lattice(m, &spec).unwrap();
            proptest::prop_assert_eq!(all.len() as u128, binomial(units as u64 + m as u64 - 1, m as u64 - 1));
            for w in &all {
                proptest::prop_assert!((w.sum() - 1.0).abs() < 1e-9);
            }
        }
    }
}
