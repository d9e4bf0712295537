use alloc::vec::Vec;

use crate::stats::median;

use super::study::{ReplicationResult, Setting};

/// One plot-ready row per `(setting, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub setting: Setting,
    pub n: usize,
    pub reps: usize,
    pub coverage_score: f64,
    pub coverage_wald: f64,
    /// Binomial Monte Carlo standard errors `sqrt(p (1 - p) / reps)`.
    pub se_score: f64,
    pub se_wald: f64,
    /// Medians over the extended reals; `+inf` sorts above every finite value.
    pub median_diam_score: f64,
    pub median_diam_wald: f64,
    pub frac_infinite: f64,
    /// Median of `diam_score / diam_wald` over replications where both are
    /// finite; NaN when there are none.
    pub median_ratio: f64,
}

/// Group by `(setting, n)` and summarize. Output is sorted by setting then
/// `n` and does not depend on the order of `results`.
pub fn aggregate(results: &[ReplicationResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(u8, u64, usize, Setting)> = results
        .iter()
        .map(|r| {
            let (a, b) = r.setting.sort_key();
            (a, b, r.n, r.setting)
        })
        .collect();
    keys.sort_by_key(|k| (k.0, k.1, k.2));
    keys.dedup_by(|x, y| (x.0, x.1, x.2) == (y.0, y.1, y.2));

    keys.into_iter()
        .map(|(k0, k1, n, setting)| {
            let group: Vec<&ReplicationResult> = results
                .iter()
                .filter(|r| r.n == n && r.setting.sort_key() == (k0, k1))
                .collect();
            summarize(setting, n, &group)
        })
        .collect()
}

fn summarize(setting: Setting, n: usize, group: &[&ReplicationResult]) -> SummaryRow {
    let reps = group.len();
    let total = reps as f64;
    let share = |pred: &dyn Fn(&ReplicationResult) -> bool| {
        group.iter().filter(|r| pred(r)).count() as f64 / total
    };
    let se = |p: f64| libm::sqrt(p * (1.0 - p) / total);
    let coverage_score = share(&|r| r.covered_score);
    let coverage_wald = share(&|r| r.covered_wald);
    let diam_score: Vec<f64> = group.iter().map(|r| r.diam_score).collect();
    let diam_wald: Vec<f64> = group.iter().map(|r| r.diam_wald).collect();
    let ratios: Vec<f64> = group.iter().filter_map(|r| r.diameter_ratio()).collect();
    SummaryRow {
        setting,
        n,
        reps,
        coverage_score,
        coverage_wald,
        se_score: se(coverage_score),
        se_wald: se(coverage_wald),
        median_diam_score: median(&diam_score),
        median_diam_wald: median(&diam_wald),
        frac_infinite: share(&|r| r.diam_score.is_infinite()),
        median_ratio: median(&ratios),
    }
}
