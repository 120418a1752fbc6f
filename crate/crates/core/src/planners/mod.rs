//! Planners for the internal-reward MDP and the Bayes-optimal oracle.

pub mod agent;
pub mod config;
pub mod oracle;
pub mod uct;
pub mod vi;

pub use agent::{
    run_agent_loop, EpisodeFailure, EpisodeRecord, FnPolicy, InternalViPolicy, OraclePolicy,
    Policy, StepRecord, UctPolicy,
};
pub use config::{Budget, PlannerConfig, RootSelection};
pub use oracle::{bayes_optimal_oracle, OracleResult, DEFAULT_NODE_CAP};
pub use uct::{depth_limit, uct_plan, uct_search, ActionStats, UctResult};
pub use vi::{reachable_states, solve_internal_vi, solve_mdp, ValueTable};
