//! Weak-instrument-robust inference for the local average treatment effect
//! (LATE) with a binary instrument and binary treatment.
//!
//! The crate computes the two influence-function scores `psi_a` (first stage)
//! and `psi_b` (reduced form) from cross-fitted nuisance predictions, and from
//! them
//!
//! * the doubly robust ratio estimator `phi_hat = mean(psi_b) / mean(psi_a)`
//!   with its Wald interval,
//! * the score confidence set `{theta : |S_n(theta)| <= z}` obtained exactly as
//!   the solution set of a quadratic inequality,
//! * the first-stage diagnostic `D_n(0)`, whose comparison with `z^2` decides
//!   whether the score set is unbounded.
//!
//! It also carries the simulation design used to study coverage under strong
//! and weak instruments, and a sampler for the weak-instrument limit law of
//! `phi_hat`.
//!
//! Everything here is pure computation over in-memory data and builds without
//! `std`; file formats, parallel execution and the command line live in the
//! `late-score` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod inference;
pub mod nuisance;
pub mod scores;
pub mod simulation;
pub mod special;
pub mod weakiv;

mod stats;

pub use data::{make_folds, Dataset, FoldAssignment, ObservedUnit};
pub use error::{Error, Result};
pub use inference::{
    dn_statistic, drml_estimate, invert_score_test, quad_coefficients, score_statistic,
    ConfidenceSet, DrmlResult, QuadCoefficients, SetTag,
};
pub use nuisance::{cross_fit, LearnerSpec, NuisancePredictions};
pub use scores::{compute_scores, functional_oracle, ScoreSample};
pub use special::{normal_cdf, normal_quantile};
pub use stats::median;
