use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, ObservedUnit};
use crate::error::{Error, Result};
use crate::scores::{functional_oracle, IvLaw};
use crate::special::normal_cdf;

/// Parameters of the simulation law
///
/// ```text
/// U, X ~ N(0, 1),  Z ~ Bernoulli(1/2)
/// A = 1{pi * Z * 1{X > 0} + U > 0}
/// Y = 2 sign(U) + treatment_shift * A
/// ```
///
/// `Y` depends on `A` only through `treatment_shift`, so the LATE equals
/// `treatment_shift` (zero by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpParams {
    /// Instrument strength.
    pub pi: f64,
    pub n: usize,
    pub treatment_shift: f64,
}

impl DgpParams {
    pub fn new(pi: f64, n: usize, treatment_shift: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "n must be at least 2, got {n}"
            )));
        }
        if !pi.is_finite() || !treatment_shift.is_finite() {
            return Err(Error::InvalidConfig(
                "pi and treatment_shift must be finite".into(),
            ));
        }
        Ok(Self {
            pi,
            n,
            treatment_shift,
        })
    }

    pub(crate) fn draw_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> ObservedUnit {
        let u: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let z: bool = rng.random();
        let push = if z && x > 0.0 { self.pi } else { 0.0 };
        let a = push + u > 0.0;
        // sign(0) = 0
        let sign = if u > 0.0 {
            1.0
        } else if u < 0.0 {
            -1.0
        } else {
            0.0
        };
        let y = 2.0 * sign + if a { self.treatment_shift } else { 0.0 };
        ObservedUnit {
            y,
            a,
            z,
            x: vec![x],
        }
    }

    /// True `r(z, x) = P(A = 1 | Z = z, X = x) = Phi(pi z 1{x > 0})`.
    pub fn oracle_r(&self, z: bool, x: f64) -> f64 {
        normal_cdf(if z && x > 0.0 { self.pi } else { 0.0 })
    }

    /// True `g(z, x) = E(Y | Z = z, X = x)`; `E sign(U) = 0`.
    pub fn oracle_g(&self, z: bool, x: f64) -> f64 {
        self.treatment_shift * self.oracle_r(z, x)
    }

    /// LATE used as coverage truth.
    pub fn true_late(&self) -> f64 {
        functional_oracle(self).unwrap_or(self.treatment_shift)
    }
}

impl IvLaw for DgpParams {
    fn intent_to_treat(&self) -> (f64, f64) {
        // Only X > 0 (probability 1/2) moves the treatment.
        let first_stage = 0.5 * (normal_cdf(self.pi) - 0.5);
        (self.treatment_shift * first_stage, first_stage)
    }
}

/// Draw `params.n` units.
pub fn dgp_generate(params: &DgpParams, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units: Vec<ObservedUnit> = (0..params.n).map(|_| params.draw_unit(&mut rng)).collect();
    Dataset::new(units).expect("simulated units are finite and n >= 2")
}
