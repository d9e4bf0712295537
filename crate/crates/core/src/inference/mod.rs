//! Score test inversion, the ratio (DRML) estimator with its Wald interval,
//! and the first-stage diagnostic `D_n`.

mod set;

pub use set::{ConfidenceSet, SetTag};

use libm::sqrt;

use crate::error::{Error, Result};
use crate::scores::{ScoreMoments, ScoreSample};
use crate::special::normal_quantile;

/// Relative band within which `a` and `Delta` are classified as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// `z_{1 - alpha/2}`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

/// Score statistic
/// `S_n(theta) = sqrt(n) * mean(psi_b - theta psi_a) / sqrt(mean((psi_b - theta psi_a)^2))`.
///
/// The denominator is the raw second moment, not the variance.
pub fn score_statistic(scores: &ScoreSample, theta: f64) -> Result<f64> {
    let n = scores.n() as f64;
    let (mut first, mut second) = (0.0, 0.0);
    for (&a, &b) in scores.psi_a().iter().zip(scores.psi_b()) {
        let e = b - theta * a;
        first += e;
        second += e * e;
    }
    if second == 0.0 {
        return Err(Error::DegenerateData("residual second moment is zero"));
    }
    Ok(sqrt(n) * (first / n) / sqrt(second / n))
}

/// Coefficients of `a theta^2 + b theta + c <= 0`, the set on which
/// `|S_n(theta)| <= z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `b^2 - 4ac`.
    pub delta: f64,
    pub n: usize,
    pub alpha: f64,
    pub z_crit: f64,
    /// Magnitudes of the terms each coefficient was formed from (floored at
    /// one); zero classification is relative to these.
    pub a_scale: f64,
    pub b_scale: f64,
    pub c_scale: f64,
    pub delta_scale: f64,
}

impl QuadCoefficients {
    pub fn from_moments(m: &ScoreMoments, alpha: f64) -> Result<Self> {
        if m.n < 2 {
            return Err(Error::InvalidData("need at least 2 scores".into()));
        }
        let z = critical_value(alpha)?;
        let n = m.n as f64;
        let z2 = z * z;
        let a = n * m.mean_a * m.mean_a - z2 * m.mean_aa;
        let b = -2.0 * n * m.mean_a * m.mean_b + 2.0 * z2 * m.mean_ab;
        let c = n * m.mean_b * m.mean_b - z2 * m.mean_bb;
        let delta = b * b - 4.0 * a * c;
        Ok(Self {
            a,
            b,
            c,
            delta,
            n: m.n,
            alpha,
            z_crit: z,
            a_scale: (n * m.mean_a * m.mean_a).max(z2 * m.mean_aa).max(1.0),
            b_scale: (2.0 * n * (m.mean_a * m.mean_b).abs())
                .max(2.0 * z2 * m.mean_ab.abs())
                .max(1.0),
            c_scale: (n * m.mean_b * m.mean_b).max(z2 * m.mean_bb).max(1.0),
            delta_scale: (b * b).max(4.0 * (a * c).abs()).max(1.0),
        })
    }

    /// `a theta^2 + b theta + c`.
    pub fn eval(&self, theta: f64) -> f64 {
        (self.a * theta + self.b) * theta + self.c
    }

    /// Scale of the terms of `eval(theta)`, for boundary-band checks.
    pub fn eval_scale(&self, theta: f64) -> f64 {
        self.a.abs() * theta * theta + self.b.abs() * theta.abs() + self.c.abs() + 1.0
    }

    /// All three coefficients vanish (constant-zero scores).
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.a.abs() <= tol * self.a_scale
            && self.b.abs() <= tol * self.b_scale
            && self.c.abs() <= tol * self.c_scale
    }

    /// The case with no admissible `theta` because `a = b = 0 < c`.
    pub fn is_trivially_empty(&self, tol: f64) -> bool {
        self.a.abs() <= tol * self.a_scale && self.b.abs() <= tol * self.b_scale && self.c > 0.0
    }
}

pub fn quad_coefficients(scores: &ScoreSample, alpha: f64) -> Result<QuadCoefficients> {
    QuadCoefficients::from_moments(&scores.moments(), alpha)
}

/// Roots of `a t^2 + b t + c` for `Delta > 0`, `a != 0`, in increasing order.
fn ordered_roots(a: f64, b: f64, c: f64, delta: f64) -> (f64, f64) {
    let sq = sqrt(delta);
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (x1, x2) = (q / a, c / q);
    if x1 <= x2 {
        (x1, x2)
    } else {
        (x2, x1)
    }
}

/// Solution set of `a theta^2 + b theta + c <= 0`.
///
/// `a` counts as zero when `|a| <= tol * a_scale` (likewise `b`, `Delta`).
/// With `r1 = (-b - sqrt(Delta)) / 2a` and `r2 = (-b + sqrt(Delta)) / 2a`:
///
/// | condition           | set                         |
/// |---------------------|-----------------------------|
/// | `Delta > 0, a > 0`  | `[r1, r2]`                  |
/// | `Delta > 0, a < 0`  | `(-inf, r2] U [r1, inf)`    |
/// | `Delta < 0, a > 0`  | empty                       |
/// | `Delta < 0, a < 0`  | real line                   |
/// | `a = 0, b > 0`      | `(-inf, -c/b]`              |
/// | `a = 0, b < 0`      | `[-c/b, inf)`               |
/// | `Delta = 0, a > 0`  | `{-b / 2a}`                 |
/// | `Delta = 0, a < 0`  | real line                   |
/// | `a = b = 0`         | real line if `c <= 0`, else empty |
pub fn invert_score_test(coeffs: &QuadCoefficients, tol: f64) -> ConfidenceSet {
    let QuadCoefficients { a, b, c, delta, .. } = *coeffs;
    if a.abs() <= tol * coeffs.a_scale {
        if b.abs() <= tol * coeffs.b_scale {
            return if c <= 0.0 {
                ConfidenceSet::WholeLine
            } else {
                ConfidenceSet::EmptySet
            };
        }
        let root = -c / b;
        return if b > 0.0 {
            ConfidenceSet::LeftRay { hi: root }
        } else {
            ConfidenceSet::RightRay { lo: root }
        };
    }
    if delta.abs() <= tol * coeffs.delta_scale {
        // Double root: a (theta - t)^2 <= 0 holds at one point when a > 0 and
        // everywhere when a < 0.
        return if a > 0.0 {
            ConfidenceSet::Point(-b / (2.0 * a))
        } else {
            ConfidenceSet::WholeLine
        };
    }
    if delta > 0.0 {
        let (lo, hi) = ordered_roots(a, b, c, delta);
        if a > 0.0 {
            ConfidenceSet::FiniteInterval { lo, hi }
        } else {
            ConfidenceSet::TwoRays {
                left_hi: lo,
                right_lo: hi,
            }
        }
    } else if a > 0.0 {
        ConfidenceSet::EmptySet
    } else {
        ConfidenceSet::WholeLine
    }
}

/// Ratio estimator and its Wald interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrmlResult {
    pub phi_hat: f64,
    pub sigma2_hat: f64,
    pub wald_lo: f64,
    pub wald_hi: f64,
    pub alpha: f64,
    pub n: usize,
}

impl DrmlResult {
    pub fn sigma_hat(&self) -> f64 {
        sqrt(self.sigma2_hat)
    }

    pub fn wald_contains(&self, theta: f64) -> bool {
        self.wald_lo <= theta && theta <= self.wald_hi
    }

    pub fn wald_diameter(&self) -> f64 {
        self.wald_hi - self.wald_lo
    }
}

/// `phi_hat = mean(psi_b) / mean(psi_a)`,
/// `sigma2_hat = mean((psi_b - phi_hat psi_a)^2) / mean(psi_a)^2`, and
/// `phi_hat -/+ z sigma_hat / sqrt(n)`.
pub fn drml_estimate(scores: &ScoreSample, alpha: f64) -> Result<DrmlResult> {
    let z = critical_value(alpha)?;
    let m = scores.moments();
    if m.mean_aa == 0.0 {
        return Err(Error::DegenerateData(
            "first-stage scores are identically zero",
        ));
    }
    if m.mean_a.abs() <= ZERO_TOL * sqrt(m.mean_aa) {
        return Err(Error::WeakDenominator {
            mean_psi_a: m.mean_a,
        });
    }
    let n = scores.n() as f64;
    let phi_hat = m.mean_b / m.mean_a;
    let resid2 = scores
        .psi_a()
        .iter()
        .zip(scores.psi_b())
        .map(|(&a, &b)| {
            let e = b - phi_hat * a;
            e * e
        })
        .sum::<f64>()
        / n;
    let sigma2_hat = resid2 / (m.mean_a * m.mean_a);
    let half = z * sqrt(sigma2_hat) / sqrt(n);
    Ok(DrmlResult {
        phi_hat,
        sigma2_hat,
        wald_lo: phi_hat - half,
        wald_hi: phi_hat + half,
        alpha,
        n: scores.n(),
    })
}

/// `D_n(theta) = n (mean(psi_a) - theta)^2 / mean((psi_a - theta)^2)`.
///
/// `D_n(0) <= z^2` exactly when the score set is unbounded (outside the
/// trivially empty case `a = b = 0 < c`).
pub fn dn_statistic(psi_a: &[f64], theta: f64) -> Result<f64> {
    if psi_a.is_empty() {
        return Err(Error::InvalidData("empty score vector".into()));
    }
    let n = psi_a.len() as f64;
    let (mut first, mut second) = (0.0, 0.0);
    for &v in psi_a {
        let d = v - theta;
        first += d;
        second += d * d;
    }
    if second == 0.0 {
        return Err(Error::DegenerateData("D_n denominator is zero"));
    }
    let mean = first / n;
    Ok(n * mean * mean / (second / n))
}

/// Weak-instrument flag `D_n(0) <= z^2`.
pub fn instrument_is_weak(dn0: f64, z_crit: f64) -> bool {
    dn0 <= z_crit * z_crit
}

/// Everything inference reports for one score sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreAnalysis {
    pub coeffs: QuadCoefficients,
    pub set: ConfidenceSet,
    /// Fails with [`Error::WeakDenominator`] when `mean(psi_a)` vanishes.
    pub drml: Result<DrmlResult>,
    pub dn0: f64,
    pub weak_instrument: bool,
}

impl ScoreAnalysis {
    /// `diam(score set) / diam(Wald)` when both are finite and the Wald
    /// interval is non-degenerate.
    pub fn diameter_ratio(&self) -> Option<f64> {
        let drml = self.drml.as_ref().ok()?;
        let ds = self.set.diameter();
        let dw = drml.wald_diameter();
        (ds.is_finite() && dw > 0.0).then(|| ds / dw)
    }
}

pub fn analyze_scores(scores: &ScoreSample, alpha: f64) -> Result<ScoreAnalysis> {
    let coeffs = quad_coefficients(scores, alpha)?;
    let moments = scores.moments();
    if moments.mean_aa == 0.0 && moments.mean_bb == 0.0 {
        return Err(Error::DegenerateData("all scores are zero"));
    }
    let set = invert_score_test(&coeffs, ZERO_TOL);
    let dn0 = dn_statistic(scores.psi_a(), 0.0)?;
    Ok(ScoreAnalysis {
        coeffs,
        set,
        drml: drml_estimate(scores, alpha),
        dn0,
        weak_instrument: instrument_is_weak(dn0, coeffs.z_crit),
    })
}
