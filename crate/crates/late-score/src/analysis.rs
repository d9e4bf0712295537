//! End-to-end analysis of one dataset and the grid-scan check of the
//! confidence set.

use late_score_core::inference::{analyze_scores, score_statistic, ScoreAnalysis};
use late_score_core::nuisance::FitWarning;
use late_score_core::{compute_scores, cross_fit, make_folds, Dataset, LearnerSpec, ScoreSample};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub scores: ScoreSample,
    pub analysis: ScoreAnalysis,
    pub warnings: Vec<FitWarning>,
}

/// Cross-fit the nuisances on folds drawn from `seed`, form the scores, and
/// invert the score test.
pub fn analyze_dataset(
    data: &Dataset,
    learner: &LearnerSpec,
    alpha: f64,
    seed: u64,
) -> AppResult<AnalysisReport> {
    learner.validate()?;
    let folds = make_folds(data.n(), learner.folds, seed)?;
    let preds = cross_fit(data, learner, &folds)?;
    for w in &preds.warnings {
        log::warn!("{w}");
    }
    let scores = compute_scores(data, &preds)?;
    let analysis = analyze_scores(&scores, alpha)?;
    Ok(AnalysisReport {
        scores,
        analysis,
        warnings: preds.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub theta: f64,
    /// NaN where the residual second moment vanishes.
    pub statistic: f64,
    pub member_by_quadratic: bool,
    pub member_by_statistic: bool,
    /// `|a theta^2 + b theta + c| <= 1e-6 * scale`: rounding may flip either
    /// rule here.
    pub in_boundary_band: bool,
}

impl ScanRow {
    pub fn is_mismatch(&self) -> bool {
        !self.in_boundary_band && self.member_by_quadratic != self.member_by_statistic
    }
}

pub const BOUNDARY_BAND: f64 = 1e-6;

/// Evaluate both membership rules on an evenly spaced grid.
pub fn scan_grid(
    scores: &ScoreSample,
    analysis: &ScoreAnalysis,
    theta_min: f64,
    theta_max: f64,
    points: usize,
) -> AppResult<Vec<ScanRow>> {
    if !(theta_min.is_finite() && theta_max.is_finite() && theta_min < theta_max) {
        return Err(AppError::Config(format!(
            "grid bounds must be finite with min < max, got [{theta_min}, {theta_max}]"
        )));
    }
    if points < 2 {
        return Err(AppError::Config(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let q = &analysis.coeffs;
    let step = (theta_max - theta_min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let theta = if i == points - 1 {
                theta_max
            } else {
                theta_min + step * i as f64
            };
            let statistic = score_statistic(scores, theta).unwrap_or(f64::NAN);
            // A vanishing residual means S_n is 0/0; the test cannot reject.
            let member_by_statistic = statistic.is_nan() || statistic.abs() <= q.z_crit;
            ScanRow {
                theta,
                statistic,
                member_by_quadratic: analysis.set.contains(theta),
                member_by_statistic,
                in_boundary_band: q.eval(theta).abs() <= BOUNDARY_BAND * q.eval_scale(theta),
            }
        })
        .collect())
}
