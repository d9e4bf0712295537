//! Observations, datasets and cross-fitting fold bookkeeping.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One row `(Y, A, Z, X)`: outcome, binary treatment, binary instrument and
/// covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedUnit {
    pub y: f64,
    pub a: bool,
    pub z: bool,
    pub x: Vec<f64>,
}

impl ObservedUnit {
    pub fn new(y: f64, a: bool, z: bool, x: Vec<f64>) -> Self {
        Self { y, a, z, x }
    }
}

/// An i.i.d. sample of at least two units sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    units: Vec<ObservedUnit>,
    p: usize,
}

impl Dataset {
    pub fn new(units: Vec<ObservedUnit>) -> Result<Self> {
        if units.len() < 2 {
            return Err(Error::InvalidData(format!(
                "fewer than 2 rows ({} given)",
                units.len()
            )));
        }
        let p = units[0].x.len();
        for (i, u) in units.iter().enumerate() {
            if u.x.len() != p {
                return Err(Error::InvalidData(format!(
                    "unit {i} has {} covariates, expected {p}",
                    u.x.len()
                )));
            }
            if !u.y.is_finite() {
                return Err(Error::InvalidData(format!(
                    "unit {i}: outcome is not finite"
                )));
            }
            if let Some(j) = u.x.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "unit {i}: covariate {j} is not finite"
                )));
            }
        }
        Ok(Self { units, p })
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn units(&self) -> &[ObservedUnit] {
        &self.units
    }

    pub fn into_units(self) -> Vec<ObservedUnit> {
        self.units
    }
}

/// Assignment of each of `n` units to one of `k` balanced folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    /// Build from an explicit assignment; every fold must be non-empty.
    pub fn from_assignment(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 folds, got {k}"
            )));
        }
        let mut sizes = vec![0usize; k];
        for &f in &fold_of {
            if f >= k {
                return Err(Error::InvalidConfig(format!("fold index {f} out of range")));
            }
            sizes[f] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig("empty fold".into()));
        }
        Ok(Self { fold_of, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded Fisher-Yates shuffle of `0..n`, then a contiguous split into `k`
/// folds whose sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count must satisfy 2 <= K <= n (K = {k}, n = {n})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut fold_of = vec![0usize; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            fold_of[i] = fold;
        }
        pos += size;
    }
    Ok(FoldAssignment { fold_of, k })
}
