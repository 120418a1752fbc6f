//! Benchmark runner for POMDP-lite planners: domain registry, seeded
//! episode batches, statistics and result files.

pub mod domain;
pub mod error;
pub mod runner;

pub use domain::{load_model, DomainInfo, DomainSpec, DomainVisitor};
pub use error::{HarnessError, Result};
pub use runner::{
    episode_seed, mean_stderr, run_episodes, summarize, tune_beta, write_results, EpisodeRow, PlannerKind, RunConfig,
    RunOutput, RunSummary, BETA_GRID,
};
