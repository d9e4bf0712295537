//! Nuisance regressions `g(z, x) = E(Y | Z = z, X = x)`,
//! `r(z, x) = E(A | Z = z, X = x)` and `m(1 | x) = P(Z = 1 | X = x)`, fitted
//! out of fold.

mod learners;

pub use learners::{
    fit_cell_mean, fit_logistic, fit_ols, CellMeanModel, CellTarget, LinearModel, LogisticModel,
    LogisticStatus, LOGISTIC_GRAD_TOL, LOGISTIC_MAX_ITER,
};

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{Dataset, FoldAssignment, ObservedUnit};
use crate::error::{Error, Result};

/// Learner for the outcome regression `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeLearner {
    /// One least-squares fit on `[z, x...]`.
    OlsLinear,
    CellMean,
}

/// Learner for the treatment regression `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreatmentLearner {
    /// Logistic regression on `[z, x...]`.
    Logistic,
    CellMean,
}

/// A user-supplied `x -> P(Z = 1 | X = x)`.
#[derive(Clone)]
pub struct PropensityFn(pub Arc<PropensityClosure>);

pub type PropensityClosure = dyn Fn(&[f64]) -> f64 + Send + Sync;

impl fmt::Debug for PropensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PropensityFn(..)")
    }
}

/// Source of the instrument propensity `m(1 | x)`.
#[derive(Debug, Clone)]
pub enum PropensityLearner {
    KnownConstant(f64),
    KnownFunction(PropensityFn),
    /// Logistic regression of `z` on `x`.
    Logistic,
}

#[derive(Debug, Clone)]
pub struct LearnerSpec {
    pub g: OutcomeLearner,
    pub r: TreatmentLearner,
    pub m: PropensityLearner,
    /// Number of cross-fitting folds.
    pub folds: usize,
    /// Propensity clipping level `eps`: `m_hat` is confined to `[eps, 1 - eps]`.
    pub clip_eps: f64,
}

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_CLIP_EPS: f64 = 0.01;

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            g: OutcomeLearner::OlsLinear,
            r: TreatmentLearner::Logistic,
            m: PropensityLearner::Logistic,
            folds: DEFAULT_FOLDS,
            clip_eps: DEFAULT_CLIP_EPS,
        }
    }
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "clip_eps must lie in (0, 0.5), got {}",
                self.clip_eps
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if let PropensityLearner::KnownConstant(v) = self.m {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "known propensity must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nuisance {
    Outcome,
    Treatment,
    Propensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningKind {
    RidgeFallback,
    Separation,
    NotConverged,
    ConstantLabels,
}

/// Non-fatal fitting problem in one fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitWarning {
    pub fold: usize,
    pub nuisance: Nuisance,
    pub kind: WarningKind,
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nuisance = match self.nuisance {
            Nuisance::Outcome => "outcome regression",
            Nuisance::Treatment => "treatment regression",
            Nuisance::Propensity => "propensity",
        };
        let kind = match self.kind {
            WarningKind::RidgeFallback => "singular design, ridge fallback used",
            WarningKind::Separation => "separated labels, predictions clipped",
            WarningKind::NotConverged => "logistic fit did not converge, predictions clipped",
            WarningKind::ConstantLabels => "constant labels, predictions clipped",
        };
        write!(f, "fold {}: {nuisance}: {kind}", self.fold)
    }
}

/// Out-of-fold nuisance predictions for every unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisancePredictions {
    pub g1: Vec<f64>,
    pub g0: Vec<f64>,
    pub r1: Vec<f64>,
    pub r0: Vec<f64>,
    /// `m_hat(Z = 1 | X_i)`; `m_hat(0 | X_i) = 1 - m1[i]`.
    pub m1: Vec<f64>,
    pub warnings: Vec<FitWarning>,
}

impl NuisancePredictions {
    pub fn len(&self) -> usize {
        self.m1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m1.is_empty()
    }
}

fn with_instrument(z: bool, x: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(x.len() + 1);
    row.push(f64::from(u8::from(z)));
    row.extend_from_slice(x);
    row
}

fn logistic_warning(status: LogisticStatus) -> Option<WarningKind> {
    match status {
        LogisticStatus::Converged => None,
        LogisticStatus::NotConverged => Some(WarningKind::NotConverged),
        LogisticStatus::Separated => Some(WarningKind::Separation),
        LogisticStatus::ConstantLabels => Some(WarningKind::ConstantLabels),
    }
}

/// Fit every nuisance on the units outside fold `k` and predict for the units
/// in fold `k`, for each fold.
///
/// Propensities are clipped to `[eps, 1 - eps]`; treatment predictions to
/// `[0, 1]`.
pub fn cross_fit(
    data: &Dataset,
    spec: &LearnerSpec,
    folds: &FoldAssignment,
) -> Result<NuisancePredictions> {
    spec.validate()?;
    let n = data.n();
    if folds.n() != n {
        return Err(Error::InvalidConfig(format!(
            "fold assignment covers {} units, dataset has {n}",
            folds.n()
        )));
    }
    let units = data.units();
    let eps = spec.clip_eps;
    let mut out = NuisancePredictions {
        g1: vec![0.0; n],
        g0: vec![0.0; n],
        r1: vec![0.0; n],
        r0: vec![0.0; n],
        m1: vec![0.0; n],
        warnings: Vec::new(),
    };

    for fold in 0..folds.k() {
        let train: Vec<&ObservedUnit> = units
            .iter()
            .enumerate()
            .filter(|(i, _)| folds.fold_of(*i) != fold)
            .map(|(_, u)| u)
            .collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds.fold_of(i) == fold).collect();
        let z_ones = train.iter().filter(|u| u.z).count();
        if z_ones == 0 || z_ones == train.len() {
            return Err(Error::DegenerateFold { fold });
        }
        let mut warn = |nuisance, kind| {
            out.warnings.push(FitWarning {
                fold,
                nuisance,
                kind,
            })
        };

        match spec.g {
            OutcomeLearner::OlsLinear => {
                let x: Vec<Vec<f64>> = train.iter().map(|u| with_instrument(u.z, &u.x)).collect();
                let y: Vec<f64> = train.iter().map(|u| u.y).collect();
                let model = fit_ols(&x, &y)?;
                if model.ridge_used {
                    warn(Nuisance::Outcome, WarningKind::RidgeFallback);
                }
                for &i in &test {
                    out.g1[i] = model.predict(&with_instrument(true, &units[i].x));
                    out.g0[i] = model.predict(&with_instrument(false, &units[i].x));
                }
            }
            OutcomeLearner::CellMean => {
                let model = fit_cell_mean(train.iter().copied(), CellTarget::Outcome)?;
                for &i in &test {
                    out.g1[i] = model.predict(true, &units[i].x);
                    out.g0[i] = model.predict(false, &units[i].x);
                }
            }
        }

        match spec.r {
            TreatmentLearner::Logistic => {
                let x: Vec<Vec<f64>> = train.iter().map(|u| with_instrument(u.z, &u.x)).collect();
                let a: Vec<bool> = train.iter().map(|u| u.a).collect();
                let model = fit_logistic(&x, &a, eps)?;
                if let Some(kind) = logistic_warning(model.status) {
                    warn(Nuisance::Treatment, kind);
                }
                for &i in &test {
                    out.r1[i] = model.predict(&with_instrument(true, &units[i].x));
                    out.r0[i] = model.predict(&with_instrument(false, &units[i].x));
                }
            }
            TreatmentLearner::CellMean => {
                let model = fit_cell_mean(train.iter().copied(), CellTarget::Treatment)?;
                for &i in &test {
                    out.r1[i] = model.predict(true, &units[i].x);
                    out.r0[i] = model.predict(false, &units[i].x);
                }
            }
        }

        match &spec.m {
            PropensityLearner::KnownConstant(v) => {
                for &i in &test {
                    out.m1[i] = *v;
                }
            }
            PropensityLearner::KnownFunction(f) => {
                for &i in &test {
                    out.m1[i] = (f.0)(&units[i].x);
                }
            }
            PropensityLearner::Logistic => {
                let x: Vec<Vec<f64>> = train.iter().map(|u| u.x.clone()).collect();
                let z: Vec<bool> = train.iter().map(|u| u.z).collect();
                let model = fit_logistic(&x, &z, eps)?;
                if let Some(kind) = logistic_warning(model.status) {
                    warn(Nuisance::Propensity, kind);
                }
                for &i in &test {
                    out.m1[i] = model.predict(&units[i].x);
                }
            }
        }
    }

    for v in out.r1.iter_mut().chain(out.r0.iter_mut()) {
        *v = v.clamp(0.0, 1.0);
    }
    for v in out.m1.iter_mut() {
        // NaN from a user function stays NaN and is caught as a positivity
        // violation downstream.
        *v = v.clamp(eps, 1.0 - eps);
    }
    Ok(out)
}
