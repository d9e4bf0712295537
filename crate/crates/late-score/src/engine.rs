//! Parallel replication engine.
//!
//! Every replication owns its random stream (seeded from the master seed,
//! `n` and the replication index), so results do not depend on how rayon
//! schedules the work. Results are collected in task order and aggregated
//! sequentially.

use std::sync::atomic::{AtomicUsize, Ordering};

use late_score_core::simulation::{
    aggregate, run_replication, ReplicationFailure, ReplicationResult, StudySpec, SummaryRow,
};
use rayon::prelude::*;

use crate::error::AppResult;

#[derive(Debug, Clone)]
pub struct StudyOutput {
    /// Ordered by position in the `n` grid, then replication index.
    pub results: Vec<ReplicationResult>,
    pub failures: Vec<ReplicationFailure>,
    pub summary: Vec<SummaryRow>,
}

/// Run every `(n, rep)` task of the study on the global rayon pool.
pub fn run_study(spec: &StudySpec) -> AppResult<StudyOutput> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.reps).map(move |rep| (n, rep)))
        .collect();
    let params: Vec<_> = spec
        .n_grid
        .iter()
        .map(|&n| spec.params(n))
        .collect::<Result<_, _>>()?;
    let total = tasks.len();
    let done = AtomicUsize::new(0);
    let step = (total / 10).max(1);

    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|&(n, rep)| {
            let p = params
                .iter()
                .find(|p| p.n == n)
                .expect("params built for every n");
            let out = run_replication(p, spec, rep);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k.is_multiple_of(step) || k == total {
                log::info!("{} replications {k}/{total}", spec.setting);
            }
            out
        })
        .collect();

    let mut results = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => {
                log::warn!("replication failed: {f}");
                failures.push(f);
            }
        }
    }
    let summary = aggregate(&results);
    Ok(StudyOutput {
        results,
        failures,
        summary,
    })
}

/// [`run_study`] on a dedicated pool with `threads` workers.
pub fn run_study_with_threads(spec: &StudySpec, threads: usize) -> AppResult<StudyOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::AppError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_study(spec))
}
