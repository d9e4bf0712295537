use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::data::make_folds;
use crate::error::{Error, Result};
use crate::inference::{analyze_scores, ConfidenceSet, ZERO_TOL};
use crate::nuisance::{cross_fit, LearnerSpec, PropensityLearner};
use crate::scores::compute_scores;
use crate::stats::mix64;

use super::dgp::{dgp_generate, DgpParams};

/// Instrument-strength regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    /// `pi = 0.15 / sqrt(n)`.
    Weak,
    /// `pi = 5`.
    Strong,
    Custom(f64),
}

impl Setting {
    pub fn pi(&self, n: usize) -> f64 {
        match *self {
            Setting::Weak => 0.15 / libm::sqrt(n as f64),
            Setting::Strong => 5.0,
            Setting::Custom(pi) => pi,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Setting::Weak => "weak",
            Setting::Strong => "strong",
            Setting::Custom(_) => "custom",
        }
    }

    /// Total order used to group and sort summary rows.
    pub(crate) fn sort_key(&self) -> (u8, u64) {
        match *self {
            Setting::Weak => (0, 0),
            Setting::Strong => (1, 0),
            Setting::Custom(pi) => (2, pi.to_bits()),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Custom(pi) => write!(f, "custom({pi})"),
            s => f.write_str(s.label()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub setting: Setting,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub learner: LearnerSpec,
    pub treatment_shift: f64,
}

impl StudySpec {
    /// Study with the instrument propensity known to be 1/2.
    pub fn new(setting: Setting, n_grid: Vec<usize>, reps: usize, alpha: f64, seed: u64) -> Self {
        let learner = LearnerSpec {
            m: PropensityLearner::KnownConstant(0.5),
            ..LearnerSpec::default()
        };
        Self {
            setting,
            n_grid,
            reps,
            alpha,
            seed,
            learner,
            treatment_shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.reps > u32::MAX as usize {
            return Err(Error::InvalidConfig("reps must fit in 32 bits".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n grid is empty".into()));
        }
        for &n in &self.n_grid {
            if n > u32::MAX as usize {
                return Err(Error::InvalidConfig("n must fit in 32 bits".into()));
            }
            self.params(n)?;
        }
        if let Setting::Custom(pi) = self.setting {
            if !pi.is_finite() {
                return Err(Error::InvalidConfig("pi must be finite".into()));
            }
        }
        self.learner.validate()
    }

    pub fn params(&self, n: usize) -> Result<DgpParams> {
        DgpParams::new(self.setting.pi(n), n, self.treatment_shift)
    }
}

/// Seed for replication `rep_id` at sample size `n`. For a fixed master seed
/// this is injective in `(n, rep_id)` while both fit in 32 bits: the key
/// `n << 32 | rep_id` is injective and `mix64` and xor are bijections.
pub fn replication_seed(master: u64, n: usize, rep_id: usize) -> u64 {
    let key = ((n as u64) << 32) | (rep_id as u64 & 0xFFFF_FFFF);
    mix64(mix64(master) ^ key)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub setting: Setting,
    pub n: usize,
    pub rep_id: usize,
    pub truth: f64,
    pub set: ConfidenceSet,
    pub covered_score: bool,
    pub diam_score: f64,
    /// NaN when the Wald interval is undefined (vanishing `mean(psi_a)`).
    pub wald_lo: f64,
    pub wald_hi: f64,
    pub covered_wald: bool,
    pub diam_wald: f64,
    pub phi_hat: f64,
    pub dn0: f64,
    pub weak_instrument: bool,
    /// The quadratic degenerated to `a = b = 0 < c` (an empty set that is not
    /// a statement about the instrument).
    pub trivially_empty: bool,
}

impl ReplicationResult {
    /// `diam(score set) / diam(Wald)` when both are finite and positive.
    pub fn diameter_ratio(&self) -> Option<f64> {
        (self.diam_score.is_finite() && self.diam_wald.is_finite() && self.diam_wald > 0.0)
            .then(|| self.diam_score / self.diam_wald)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub setting: Setting,
    pub n: usize,
    pub rep_id: usize,
    pub error: Error,
}

impl fmt::Display for ReplicationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} n={} rep {}: {}",
            self.setting, self.n, self.rep_id, self.error
        )
    }
}

/// One replication: draw data, cross-fit, build the score set and the Wald
/// interval, and score coverage of the true LATE.
pub fn run_replication(
    params: &DgpParams,
    spec: &StudySpec,
    rep_id: usize,
) -> core::result::Result<ReplicationResult, ReplicationFailure> {
    let fail = |error| ReplicationFailure {
        setting: spec.setting,
        n: params.n,
        rep_id,
        error,
    };
    let seed = replication_seed(spec.seed, params.n, rep_id);
    let data = dgp_generate(params, seed);
    let folds =
        make_folds(params.n, spec.learner.folds, mix64(seed ^ FOLD_STREAM)).map_err(fail)?;
    let preds = cross_fit(&data, &spec.learner, &folds).map_err(fail)?;
    let scores = compute_scores(&data, &preds).map_err(fail)?;
    let analysis = analyze_scores(&scores, spec.alpha).map_err(fail)?;

    let truth = params.true_late();
    let (wald_lo, wald_hi, phi_hat) = match &analysis.drml {
        Ok(d) => (d.wald_lo, d.wald_hi, d.phi_hat),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    let covered_wald = wald_lo <= truth && truth <= wald_hi;
    let diam_wald = if wald_lo.is_nan() {
        f64::INFINITY
    } else {
        wald_hi - wald_lo
    };
    Ok(ReplicationResult {
        setting: spec.setting,
        n: params.n,
        rep_id,
        truth,
        set: analysis.set,
        covered_score: analysis.set.contains(truth),
        diam_score: analysis.set.diameter(),
        wald_lo,
        wald_hi,
        covered_wald,
        diam_wald,
        phi_hat,
        dn0: analysis.dn0,
        weak_instrument: analysis.weak_instrument,
        trivially_empty: analysis.coeffs.is_trivially_empty(ZERO_TOL),
    })
}

const FOLD_STREAM: u64 = 0x5EED_F01D_0000_0001;
