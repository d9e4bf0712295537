//! Influence-function scores for the numerator and denominator of the LATE.
//!
//! For nuisances `eta = (m, r, g)`:
//!
//! ```text
//! psi_b = (2Z - 1) / m(Z|X) * (Y - g(Z, X)) + g(1, X) - g(0, X)
//! psi_a = (2Z - 1) / m(Z|X) * (A - r(Z, X)) + r(1, X) - r(0, X)
//! ```
//!
//! so that `E psi_b / E psi_a` is the LATE at the true nuisances.

use alloc::format;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nuisance::NuisancePredictions;

/// Per-unit score pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSample {
    psi_a: Vec<f64>,
    psi_b: Vec<f64>,
}

impl ScoreSample {
    pub fn new(psi_a: Vec<f64>, psi_b: Vec<f64>) -> Result<Self> {
        if psi_a.len() != psi_b.len() {
            return Err(Error::InvalidData(format!(
                "psi_a has {} entries, psi_b has {}",
                psi_a.len(),
                psi_b.len()
            )));
        }
        if psi_a.is_empty() {
            return Err(Error::InvalidData("empty score sample".into()));
        }
        if psi_a.iter().chain(&psi_b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite score".into()));
        }
        Ok(Self { psi_a, psi_b })
    }

    pub fn n(&self) -> usize {
        self.psi_a.len()
    }

    pub fn psi_a(&self) -> &[f64] {
        &self.psi_a
    }

    pub fn psi_b(&self) -> &[f64] {
        &self.psi_b
    }

    /// Empirical moments used throughout inference.
    pub fn moments(&self) -> ScoreMoments {
        let nf = self.n() as f64;
        let (mut a, mut b, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in self.psi_a.iter().zip(&self.psi_b) {
            a += x;
            b += y;
            aa += x * x;
            bb += y * y;
            ab += x * y;
        }
        ScoreMoments {
            n: self.n(),
            mean_a: a / nf,
            mean_b: b / nf,
            mean_aa: aa / nf,
            mean_bb: bb / nf,
            mean_ab: ab / nf,
        }
    }
}

/// First and raw second empirical moments of `(psi_a, psi_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreMoments {
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_aa: f64,
    pub mean_bb: f64,
    pub mean_ab: f64,
}

/// Scores from data and (out-of-fold) nuisance predictions.
pub fn compute_scores(data: &Dataset, preds: &NuisancePredictions) -> Result<ScoreSample> {
    let n = data.n();
    for (name, len) in [
        ("g1", preds.g1.len()),
        ("g0", preds.g0.len()),
        ("r1", preds.r1.len()),
        ("r0", preds.r0.len()),
        ("m1", preds.m1.len()),
    ] {
        if len != n {
            return Err(Error::InvalidData(format!(
                "prediction vector {name} has length {len}, dataset has {n}"
            )));
        }
    }
    let mut psi_a = Vec::with_capacity(n);
    let mut psi_b = Vec::with_capacity(n);
    for (i, u) in data.units().iter().enumerate() {
        let m1 = preds.m1[i];
        if !(m1 > 0.0 && m1 < 1.0) {
            return Err(Error::Positivity {
                index: i,
                value: m1,
            });
        }
        let a = f64::from(u8::from(u.a));
        let (weight, g_obs, r_obs) = if u.z {
            (1.0 / m1, preds.g1[i], preds.r1[i])
        } else {
            (-1.0 / (1.0 - m1), preds.g0[i], preds.r0[i])
        };
        psi_b.push(weight * (u.y - g_obs) + preds.g1[i] - preds.g0[i]);
        psi_a.push(weight * (a - r_obs) + preds.r1[i] - preds.r0[i]);
    }
    ScoreSample::new(psi_a, psi_b)
}

/// A law for `(Y, A, Z, X)` whose intent-to-treat contrasts are known.
pub trait IvLaw {
    /// `(E{g(1,X) - g(0,X)}, E{r(1,X) - r(0,X)})`.
    fn intent_to_treat(&self) -> (f64, f64);
}

/// The LATE functional `E{g(1,X) - g(0,X)} / E{r(1,X) - r(0,X)}` of a law.
pub fn functional_oracle<L: IvLaw + ?Sized>(law: &L) -> Result<f64> {
    let (num, den) = law.intent_to_treat();
    if den == 0.0 {
        return Err(Error::WeakDenominator { mean_psi_a: den });
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ObservedUnit;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn preds(g1: f64, g0: f64, r1: f64, r0: f64, m1: f64, n: usize) -> NuisancePredictions {
        NuisancePredictions {
            g1: vec![g1; n],
            g0: vec![g0; n],
            r1: vec![r1; n],
            r0: vec![r0; n],
            m1: vec![m1; n],
            warnings: vec![],
        }
    }

    fn two(u: ObservedUnit) -> Dataset {
        Dataset::new(vec![u.clone(), u]).unwrap()
    }

    #[test]
    fn zero_residual_leaves_contrast() {
        let data = two(ObservedUnit::new(1.0, true, true, vec![]));
        let s = compute_scores(&data, &preds(1.0, 0.3, 0.5, 0.5, 0.5, 2)).unwrap();
        assert_abs_diff_eq!(s.psi_b()[0], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn control_arm_hand_arithmetic() {
        let data = two(ObservedUnit::new(0.0, false, false, vec![]));
        let s = compute_scores(&data, &preds(0.0, 0.0, 0.5, 0.5, 0.5, 2)).unwrap();
        assert_abs_diff_eq!(s.psi_a()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn positivity_violation() {
        let data = two(ObservedUnit::new(0.0, false, false, vec![]));
        let err = compute_scores(&data, &preds(0.0, 0.0, 0.5, 0.5, 1.0, 2)).unwrap_err();
        assert_eq!(
            err,
            Error::Positivity {
                index: 0,
                value: 1.0
            }
        );
    }

    // Straight transcription of the display with m(Z|X) looked up per arm.
    fn transcription(u: &ObservedUnit, g: [f64; 2], r: [f64; 2], m1: f64) -> (f64, f64) {
        let z = if u.z { 1.0 } else { 0.0 };
        let a = if u.a { 1.0 } else { 0.0 };
        let m_z = if u.z { m1 } else { 1.0 - m1 };
        let gz = if u.z { g[1] } else { g[0] };
        let rz = if u.z { r[1] } else { r[0] };
        let pa = (2.0 * z - 1.0) / m_z * (a - rz) + r[1] - r[0];
        let pb = (2.0 * z - 1.0) / m_z * (u.y - gz) + g[1] - g[0];
        (pa, pb)
    }

    #[test]
    fn matches_transcription() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let units: Vec<ObservedUnit> = (0..20)
            .map(|_| {
                ObservedUnit::new(
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random(),
                    rng.random(),
                    vec![],
                )
            })
            .collect();
        let data = Dataset::new(units).unwrap();
        let mut p = preds(0.0, 0.0, 0.0, 0.0, 0.5, 20);
        for i in 0..20 {
            p.g1[i] = rng.random::<f64>();
            p.g0[i] = rng.random::<f64>();
            p.r1[i] = rng.random::<f64>();
            p.r0[i] = rng.random::<f64>();
            p.m1[i] = 0.1 + 0.8 * rng.random::<f64>();
        }
        let s = compute_scores(&data, &p).unwrap();
        for (i, u) in data.units().iter().enumerate() {
            let (pa, pb) = transcription(u, [p.g0[i], p.g1[i]], [p.r0[i], p.r1[i]], p.m1[i]);
            assert_abs_diff_eq!(s.psi_a()[i], pa, epsilon = 1e-12);
            assert_abs_diff_eq!(s.psi_b()[i], pb, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_outcome_scales_psi_b_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let units: Vec<ObservedUnit> = (0..30)
            .map(|_| ObservedUnit::new(rng.random::<f64>(), rng.random(), rng.random(), vec![]))
            .collect();
        let data = Dataset::new(units.clone()).unwrap();
        let p = preds(0.4, 0.1, 0.7, 0.2, 0.4, 30);
        let base = compute_scores(&data, &p).unwrap();
        let lambda = 4.0;
        let scaled_units = units.into_iter().map(|mut u| {
            u.y *= lambda;
            u
        });
        let scaled = Dataset::new(scaled_units.collect()).unwrap();
        let mut sp = p.clone();
        sp.g1
            .iter_mut()
            .chain(sp.g0.iter_mut())
            .for_each(|g| *g *= lambda);
        let s = compute_scores(&scaled, &sp).unwrap();
        assert_eq!(s.psi_a(), base.psi_a());
        for (x, y) in s.psi_b().iter().zip(base.psi_b()) {
            assert_eq!(*x, lambda * y);
        }
    }

    #[test]
    fn oracle_nuisances_with_deterministic_outcome() {
        // Y = 2 z + x exactly, so g is exact and every residual vanishes.
        let units: Vec<ObservedUnit> = (0..10)
            .map(|i| {
                let x = i as f64 * 0.3;
                let z = i % 2 == 0;
                ObservedUnit::new(2.0 * f64::from(u8::from(z)) + x, z, z, vec![x])
            })
            .collect();
        let data = Dataset::new(units).unwrap();
        let mut p = preds(0.0, 0.0, 1.0, 0.0, 0.5, 10);
        for (i, u) in data.units().iter().enumerate() {
            p.g1[i] = 2.0 + u.x[0];
            p.g0[i] = u.x[0];
        }
        let s = compute_scores(&data, &p).unwrap();
        for i in 0..10 {
            assert_abs_diff_eq!(s.psi_b()[i], p.g1[i] - p.g0[i], epsilon = 1e-15);
        }
    }

    struct PerfectCompliance;
    impl IvLaw for PerfectCompliance {
        // A = Z and Y = A: both contrasts equal one.
        fn intent_to_treat(&self) -> (f64, f64) {
            (1.0, 1.0)
        }
    }

    #[test]
    fn oracle_perfect_compliance() {
        assert_eq!(functional_oracle(&PerfectCompliance).unwrap(), 1.0);
    }

    #[test]
    fn score_sample_rejects_bad_input() {
        assert!(ScoreSample::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(ScoreSample::new(vec![], vec![]).is_err());
        assert!(ScoreSample::new(vec![f64::NAN], vec![1.0]).is_err());
    }
}
