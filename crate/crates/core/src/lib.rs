//! Planning for POMDP-lite models: POMDPs whose hidden parameter is fixed
//! or evolves deterministically.
//!
//! Fixing the hidden value turns such a model into an ordinary MDP over
//! augmented states (x, õ). The planner here keeps a belief over hidden
//! values, adds an exploration bonus equal to the expected L1 change of
//! that belief, and acts greedily on the resulting internal-reward MDP.
//!
//! Everything numeric is generic over [`Scalar`]: `f64`, `f32`, or the
//! exact rational [`Exact`].

pub mod baselines;
pub mod belief;
pub mod domains;
pub mod error;
pub mod format;
pub mod model;
pub mod planners;
pub mod scalar;
pub mod theory;

pub use baselines::{
    mean_mdp_policy, qmdp_policy, random_policy, QmdpPolicy, QmdpSolution, RandomPolicy,
};
pub use belief::{
    bayes_update, estimate_reward_bonus, initial_belief, internal_reward, l1_divergence,
    mean_reward, mean_transition, reward_bonus, track_update, Belief, BeliefConfig, BeliefKind,
    BeliefSummary, BonusConfig, BonusEstimate, InternalRewardModel,
};
pub use error::{PliteError, Result};
pub use format::{parse_model, serialize_model, FormatError, FormatErrorKind, PliteModel};
pub use model::{
    history_fold, indexed_mdp_view, legal_actions, sample_step, view_for, Action, AugmentedState,
    Dist, HiddenSpace, IndexedMdpView, Observation, PomdpLite, StepOutcome,
};
pub use planners::{
    bayes_optimal_oracle, run_agent_loop, solve_internal_vi, solve_mdp, uct_plan, uct_search,
    Budget, EpisodeRecord, PlannerConfig, Policy, RootSelection, UctPolicy, ValueTable,
};
pub use scalar::{Exact, Scalar};

pub type Tiger64 = domains::Tiger<f64>;
pub type TigerExact = domains::Tiger<Exact>;
pub type RockSample64 = domains::RockSample<f64>;
pub type Battleship64 = domains::Battleship<f64>;
pub type Chain64 = domains::DeterministicChain<f64>;
pub type ChainExact = domains::DeterministicChain<Exact>;
pub type PliteModel64 = format::PliteModel<f64>;
pub type PliteModelExact = format::PliteModel<Exact>;
pub type Belief64<T> = belief::Belief<T, f64>;
pub type BeliefExact<T> = belief::Belief<T, Exact>;
