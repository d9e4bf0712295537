//! Simulation design for coverage studies: the data-generating process, one
//! replication, and aggregation into summary rows.

mod dgp;
mod study;
mod summary;

pub use dgp::{dgp_generate, DgpParams};
pub use study::{
    replication_seed, run_replication, ReplicationFailure, ReplicationResult, Setting, StudySpec,
};
pub use summary::{aggregate, SummaryRow};
