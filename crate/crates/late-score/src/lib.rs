//! File formats, the parallel simulation engine, and the command-line front
//! end around [`late_score_core`].

pub mod analysis;
pub mod cli;
pub mod csv_io;
pub mod engine;
pub mod error;

pub use error::{AppError, AppResult};
