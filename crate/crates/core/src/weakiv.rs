//! Weak-instrument limit law of the ratio estimator.
//!
//! When `E psi_a = c_a / sqrt(n)` and `E psi_b = c_b / sqrt(n)`, and
//! `sqrt(n) (P_n - E)(psi_a, psi_b)` converges to `(N_a, N_b) ~ N(0, Sigma_ab)`,
//! then
//!
//! ```text
//! phi_hat - phi  ->  (N_b + c_b) / (N_a + c_a) - c_b / c_a
//!                 =  (c_a N_b - c_b N_a) / (c_a^2 + c_a N_a)
//! ```
//!
//! a ratio of correlated normals with no finite mean.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::simulation::DgpParams;
use crate::special::normal_cdf;

const PSD_TOL: f64 = 1e-12;

/// Lower-triangular square root of a 2x2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateNormal {
    l11: f64,
    l21: f64,
    l22: f64,
}

impl BivariateNormal {
    pub fn new(sigma: [[f64; 2]; 2]) -> Result<Self> {
        let [[s11, s12], [s21, s22]] = sigma;
        if sigma.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "covariance entries must be finite".into(),
            ));
        }
        let scale = s11
            .abs()
            .max(s22.abs())
            .max(s12.abs())
            .max(f64::MIN_POSITIVE);
        if (s12 - s21).abs() > PSD_TOL * scale {
            return Err(Error::InvalidConfig(
                "covariance matrix is not symmetric".into(),
            ));
        }
        if s11 < 0.0 || s22 < 0.0 || s12 * s12 > s11 * s22 + PSD_TOL * scale * scale {
            return Err(Error::NotPositiveSemidefinite);
        }
        let l11 = libm::sqrt(s11);
        let l21 = if l11 > 0.0 { s12 / l11 } else { 0.0 };
        let l22 = libm::sqrt((s22 - l21 * l21).max(0.0));
        Ok(Self { l11, l21, l22 })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        (self.l11 * e1, self.l21 * e1 + self.l22 * e2)
    }
}

/// One draw from `N(0, sigma)`.
pub fn sample_bivariate_normal<R: Rng + ?Sized>(
    sigma: [[f64; 2]; 2],
    rng: &mut R,
) -> Result<(f64, f64)> {
    Ok(BivariateNormal::new(sigma)?.sample(rng))
}

/// Drift constants and limiting score covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakIvConfig {
    pub c_a: f64,
    pub c_b: f64,
    pub sigma_ab: [[f64; 2]; 2],
}

impl WeakIvConfig {
    pub fn new(c_a: f64, c_b: f64, sigma_ab: [[f64; 2]; 2]) -> Result<Self> {
        if !c_a.is_finite() || !c_b.is_finite() {
            return Err(Error::InvalidConfig("c_a and c_b must be finite".into()));
        }
        if c_a == 0.0 {
            return Err(Error::InvalidConfig("c_a must be nonzero".into()));
        }
        BivariateNormal::new(sigma_ab)?;
        Ok(Self { c_a, c_b, sigma_ab })
    }
}

/// Sampler for the limit law with the covariance factor precomputed.
#[derive(Debug, Clone, Copy)]
pub struct WeakLimitSampler {
    c_a: f64,
    c_b: f64,
    normal: BivariateNormal,
}

impl WeakLimitSampler {
    pub fn new(cfg: &WeakIvConfig) -> Result<Self> {
        Ok(Self {
            c_a: cfg.c_a,
            c_b: cfg.c_b,
            normal: BivariateNormal::new(cfg.sigma_ab)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let (na, nb) = self.normal.sample(rng);
            let den = self.c_a * self.c_a + self.c_a * na;
            // Probability-zero event; redrawing leaves the law unchanged.
            if den != 0.0 {
                return (self.c_a * nb - self.c_b * na) / den;
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

pub fn sample_weak_limit<R: Rng + ?Sized>(cfg: &WeakIvConfig, rng: &mut R) -> Result<f64> {
    Ok(WeakLimitSampler::new(cfg)?.sample(rng))
}

/// Monte Carlo calibration of [`WeakIvConfig`] for a simulation law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakIvCalibration {
    pub c_a: f64,
    pub c_b: f64,
    pub sigma_ab: [[f64; 2]; 2],
    pub se_c_a: f64,
    pub se_c_b: f64,
    pub se_sigma_ab: [[f64; 2]; 2],
    pub draws: usize,
    /// `|c_a| <= 3 se`: the drift condition `c_a != 0` is not supported.
    pub c_a_vanishes: bool,
    pub c_b_vanishes: bool,
}

impl WeakIvCalibration {
    pub fn config(&self) -> Result<WeakIvConfig> {
        if self.c_a_vanishes {
            return Err(Error::InvalidConfig(alloc::format!(
                "calibrated c_a = {} is indistinguishable from zero (se {})",
                self.c_a,
                self.se_c_a
            )));
        }
        WeakIvConfig::new(self.c_a, self.c_b, self.sigma_ab)
    }
}

struct OracleDraw {
    psi_a: f64,
    psi_b: f64,
    /// `r(1, X) - r(0, X)` and `g(1, X) - g(0, X)`.
    contrast_a: f64,
    contrast_b: f64,
}

fn oracle_draw<R: Rng + ?Sized>(dgp: &DgpParams, rng: &mut R) -> OracleDraw {
    let unit = dgp.draw_unit(rng);
    let x = unit.x[0];
    let (r1, r0) = (dgp.oracle_r(true, x), dgp.oracle_r(false, x));
    let (g1, g0) = (dgp.oracle_g(true, x), dgp.oracle_g(false, x));
    let m = 0.5;
    let (w, r_obs, g_obs) = if unit.z {
        (1.0 / m, r1, g1)
    } else {
        (-1.0 / (1.0 - m), r0, g0)
    };
    let a = f64::from(u8::from(unit.a));
    OracleDraw {
        psi_a: w * (a - r_obs) + r1 - r0,
        psi_b: w * (unit.y - g_obs) + g1 - g0,
        contrast_a: r1 - r0,
        contrast_b: g1 - g0,
    }
}

/// Estimate `c_a = sqrt(n) E psi_a`, `c_b = sqrt(n) E psi_b` and
/// `Sigma_ab = Cov(psi_a, psi_b)` at the true nuisances of `dgp` by
/// simulation.
///
/// The drifts are averaged through the regression contrasts
/// `r(1,X) - r(0,X)` and `g(1,X) - g(0,X)`, which have the same means as
/// `psi_a`, `psi_b` but far smaller variance. Two passes over the same
/// random stream give centered second moments and their standard errors.
pub fn estimate_weakiv_config(
    dgp: &DgpParams,
    oracle_draws: usize,
    seed: u64,
) -> Result<WeakIvCalibration> {
    if oracle_draws < 2 {
        return Err(Error::InvalidConfig("need at least 2 oracle draws".into()));
    }
    let nd = oracle_draws as f64;
    let (mut sa, mut sb, mut sca, mut scb, mut sca2, mut scb2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..oracle_draws {
        let d = oracle_draw(dgp, &mut rng);
        sa += d.psi_a;
        sb += d.psi_b;
        sca += d.contrast_a;
        scb += d.contrast_b;
        sca2 += d.contrast_a * d.contrast_a;
        scb2 += d.contrast_b * d.contrast_b;
    }
    let (ma, mb) = (sa / nd, sb / nd);
    let (mca, mcb) = (sca / nd, scb / nd);
    let var_ca = ((sca2 / nd - mca * mca) * nd / (nd - 1.0)).max(0.0);
    let var_cb = ((scb2 / nd - mcb * mcb) * nd / (nd - 1.0)).max(0.0);

    // Second pass: centered products and their squares.
    let mut sum = [0.0f64; 3];
    let mut sum2 = [0.0f64; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..oracle_draws {
        let d = oracle_draw(dgp, &mut rng);
        let (ea, eb) = (d.psi_a - ma, d.psi_b - mb);
        for (k, v) in [ea * ea, ea * eb, eb * eb].into_iter().enumerate() {
            sum[k] += v;
            sum2[k] += v * v;
        }
    }
    let cov: [f64; 3] = core::array::from_fn(|k| sum[k] / (nd - 1.0));
    let se: [f64; 3] = core::array::from_fn(|k| {
        let m = sum[k] / nd;
        libm::sqrt(((sum2[k] / nd - m * m) / nd).max(0.0))
    });

    let root_n = libm::sqrt(dgp.n as f64);
    let c_a = root_n * mca;
    let c_b = root_n * mcb;
    let se_c_a = root_n * libm::sqrt(var_ca / nd);
    let se_c_b = root_n * libm::sqrt(var_cb / nd);
    Ok(WeakIvCalibration {
        c_a,
        c_b,
        sigma_ab: [[cov[0], cov[1]], [cov[1], cov[2]]],
        se_c_a,
        se_c_b,
        se_sigma_ab: [[se[0], se[1]], [se[1], se[2]]],
        draws: oracle_draws,
        c_a_vanishes: c_a.abs() <= 3.0 * se_c_a,
        c_b_vanishes: c_b.abs() <= 3.0 * se_c_b,
    })
}

/// Closed-form drifts for the simulation law: `E{r(1,X) - r(0,X)}` is
/// `P(X > 0) (Phi(pi) - 1/2)`.
pub fn exact_drifts(dgp: &DgpParams) -> (f64, f64) {
    let root_n = libm::sqrt(dgp.n as f64);
    let first_stage = 0.5 * (normal_cdf(dgp.pi) - 0.5);
    (
        root_n * first_stage,
        root_n * dgp.treatment_shift * first_stage,
    )
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F1 - F2|`. NaN when either
/// sample is empty.
pub fn ks_distance(sample1: &[f64], sample2: &[f64]) -> f64 {
    if sample1.is_empty() || sample2.is_empty() {
        return f64::NAN;
    }
    let mut x = sample1.to_vec();
    let mut y = sample2.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = if x[i].total_cmp(&y[j]).is_le() {
            x[i]
        } else {
            y[j]
        };
        while i < x.len() && x[i].total_cmp(&v).is_le() {
            i += 1;
        }
        while j < y.len() && y[j].total_cmp(&v).is_le() {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

/// `t * P(|V| > t)` for each threshold, from a sample of draws.
pub fn scaled_tail_mass(draws: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = draws.len() as f64;
    thresholds
        .iter()
        .map(|&t| t * draws.iter().filter(|v| v.abs() > t).count() as f64 / n)
        .collect()
}
