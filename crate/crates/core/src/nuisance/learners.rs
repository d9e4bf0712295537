//! Least squares, logistic regression and cell-mean learners.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::data::ObservedUnit;
use crate::error::{Error, Result};

const RIDGE_SCALE: f64 = 1e-8;
const PIVOT_FLOOR: f64 = 1e-12;

/// Linear model `intercept + coef . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// Set when the design was rank deficient and a ridge penalty was added.
    pub ridge_used: bool,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

fn check_rows(features: &[Vec<f64>], targets: usize) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::InvalidData("cannot fit a model on zero rows".into()));
    }
    if features.len() != targets {
        return Err(Error::InvalidData(
            "features and targets differ in length".into(),
        ));
    }
    let p = features[0].len();
    if features.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidData("ragged feature matrix".into()));
    }
    Ok(p)
}

/// Solves the symmetric system `gram * beta = rhs`, adding a trace-scaled ridge
/// when the Cholesky factor is missing or has a negligible pivot.
fn solve_normal_equations(gram: DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, bool) {
    let p = gram.nrows();
    let max_diag = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
    if max_diag <= 0.0 {
        return (DVector::zeros(p), true);
    }
    if let Some(chol) = gram.clone().cholesky() {
        let l = chol.l_dirty();
        let well_posed = (0..p).all(|i| l[(i, i)] * l[(i, i)] > PIVOT_FLOOR * max_diag);
        if well_posed {
            return (chol.solve(rhs), false);
        }
    }
    let lambda = RIDGE_SCALE * gram.trace().max(f64::MIN_POSITIVE);
    let mut ridged = gram;
    for i in 0..p {
        ridged[(i, i)] += lambda;
    }
    match ridged.clone().cholesky() {
        Some(chol) => (chol.solve(rhs), true),
        // Only reachable with non-finite input; fall back to no slopes.
        None => (DVector::zeros(p), true),
    }
}

/// Ordinary least squares with an intercept. Features are centered before the
/// normal equations are formed, so the intercept is exact for constant targets.
pub fn fit_ols(features: &[Vec<f64>], targets: &[f64]) -> Result<LinearModel> {
    let p = check_rows(features, targets.len())?;
    let n = features.len();
    let nf = n as f64;
    let y_mean = targets.iter().sum::<f64>() / nf;
    if p == 0 {
        return Ok(LinearModel {
            intercept: y_mean,
            coef: Vec::new(),
            ridge_used: false,
        });
    }
    let mut x_mean = alloc::vec![0.0; p];
    for row in features {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let xc = DMatrix::from_fn(n, p, |i, j| features[i][j] - x_mean[j]);
    let yc = DVector::from_iterator(n, targets.iter().map(|y| y - y_mean));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;
    let (beta, ridge_used) = solve_normal_equations(gram, &rhs);
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        intercept,
        coef,
        ridge_used,
    })
}

/// How a logistic fit ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogisticStatus {
    Converged,
    /// Iteration cap reached without meeting the gradient tolerance.
    NotConverged,
    /// Fitted probabilities were pushed to 0 or 1: the classes are (quasi)
    /// separable and the coefficients diverge.
    Separated,
    /// All labels equal; the model predicts the clipped label frequency.
    ConstantLabels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub status: LogisticStatus,
    pub iterations: usize,
    clip_eps: f64,
}

impl LogisticModel {
    /// Linear predictor.
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Predicted probability. Clipped to `[eps, 1 - eps]` unless the fit
    /// converged normally.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let p = sigmoid(self.logit(x));
        if self.status == LogisticStatus::Converged {
            p
        } else {
            p.clamp(self.clip_eps, 1.0 - self.clip_eps)
        }
    }
}

pub const LOGISTIC_MAX_ITER: usize = 100;
pub const LOGISTIC_GRAD_TOL: f64 = 1e-8;

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

fn log_likelihood(eta: &DVector<f64>, labels: &[bool]) -> f64 {
    // log(1 + e^t) computed without overflow.
    let softplus = |t: f64| {
        if t > 0.0 {
            t + libm::log1p(libm::exp(-t))
        } else {
            libm::log1p(libm::exp(t))
        }
    };
    eta.iter()
        .zip(labels)
        .map(|(&t, &y)| if y { -softplus(-t) } else { -softplus(t) })
        .sum()
}

/// Maximum-likelihood logistic regression with intercept by iteratively
/// reweighted least squares (Newton steps with step halving).
pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    clip_eps: f64,
) -> Result<LogisticModel> {
    let p = check_rows(features, labels.len())?;
    let n = features.len();
    let ones = labels.iter().filter(|&&l| l).count();
    if ones == 0 || ones == n {
        let freq = ones as f64 / n as f64;
        let freq = freq.clamp(clip_eps, 1.0 - clip_eps);
        return Ok(LogisticModel {
            intercept: libm::log(freq / (1.0 - freq)),
            coef: alloc::vec![0.0; p],
            status: LogisticStatus::ConstantLabels,
            iterations: 0,
            clip_eps,
        });
    }

    let design = DMatrix::from_fn(
        n,
        p + 1,
        |i, j| if j == 0 { 1.0 } else { features[i][j - 1] },
    );
    let y = DVector::from_iterator(n, labels.iter().map(|&l| if l { 1.0 } else { 0.0 }));
    let mut beta = DVector::zeros(p + 1);
    let mut eta = &design * &beta;
    let mut ll = log_likelihood(&eta, labels);
    let mut status = LogisticStatus::NotConverged;
    let mut iterations = 0;

    for it in 0..LOGISTIC_MAX_ITER {
        iterations = it + 1;
        let mu = eta.map(sigmoid);
        let grad = design.transpose() * (&y - &mu);
        if grad.amax() / n as f64 <= LOGISTIC_GRAD_TOL {
            status = LogisticStatus::Converged;
            break;
        }
        let w = mu.map(|m| m * (1.0 - m));
        let weighted = DMatrix::from_fn(n, p + 1, |i, j| design[(i, j)] * w[i]);
        let hessian = design.transpose() * weighted;
        let (step, _) = solve_normal_equations(hessian, &grad);

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = &beta + &step * scale;
            let cand_eta = &design * &candidate;
            let cand_ll = log_likelihood(&cand_eta, labels);
            if cand_ll >= ll - 1e-12 * ll.abs() {
                beta = candidate;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Fitted probabilities saturating at 0/1 signal separation; a vanishing
    // gradient there is convergence towards infinity, not an MLE.
    if eta.iter().any(|t| t.abs() > 30.0) {
        status = LogisticStatus::Separated;
    }
    let coef = beta.iter().skip(1).copied().collect();
    Ok(LogisticModel {
        intercept: beta[0],
        coef,
        status,
        iterations,
        clip_eps,
    })
}

/// Target of a cell-mean fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellTarget {
    Outcome,
    Treatment,
}

/// Mean of the target within each `(z, x1 > 0)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeanModel {
    /// Indexed by `[z][x1 > 0]`.
    pub means: [[f64; 2]; 2],
}

fn cell_of(u: &ObservedUnit) -> usize {
    usize::from(u.x.first().is_some_and(|&v| v > 0.0))
}

impl CellMeanModel {
    pub fn predict(&self, z: bool, x: &[f64]) -> f64 {
        let cell = usize::from(x.first().is_some_and(|&v| v > 0.0));
        self.means[usize::from(z)][cell]
    }
}

/// Cell means over a slice of units; empty cells take the slice's marginal
/// mean.
pub fn fit_cell_mean<'a, I>(units: I, target: CellTarget) -> Result<CellMeanModel>
where
    I: IntoIterator<Item = &'a ObservedUnit>,
{
    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [[0usize; 2]; 2];
    let (mut total, mut count) = (0.0, 0usize);
    for u in units {
        let v = match target {
            CellTarget::Outcome => u.y,
            CellTarget::Treatment => f64::from(u8::from(u.a)),
        };
        let (zi, ci) = (usize::from(u.z), cell_of(u));
        sums[zi][ci] += v;
        counts[zi][ci] += 1;
        total += v;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidData("cell-mean fit on an empty slice".into()));
    }
    let marginal = total / count as f64;
    let mut means = [[marginal; 2]; 2];
    for z in 0..2 {
        for c in 0..2 {
            if counts[z][c] > 0 {
                means[z][c] = sums[z][c] / counts[z][c] as f64;
            }
        }
    }
    Ok(CellMeanModel { means })
}
