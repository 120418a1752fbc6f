//! The online control loop: plan, act, observe, update the belief.

use std::time::Instant;

use rand::{Rng, RngCore};

use crate::belief::{track_update, Belief, BeliefConfig, BeliefSummary};
use crate::error::{PliteError, Result};
use crate::model::{sample_step, Action, AugmentedState, PomdpLite};
use crate::planners::{oracle::bayes_optimal_oracle, solve_internal_vi, uct_plan, PlannerConfig};
use crate::scalar::Scalar;

/// A decision rule from (belief, state) to action.
pub trait Policy<M: PomdpLite> {
    fn name(&self) -> &str;

    fn act(
        &mut self,
        model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        rng: &mut dyn RngCore,
    ) -> Result<Action>;
}

/// UCT on the internal-reward MDP. With β = 0 this is the Mean MDP agent.
#[derive(Clone, Debug)]
pub struct UctPolicy {
    pub cfg: PlannerConfig,
    name: String,
}

impl UctPolicy {
    pub fn new(cfg: PlannerConfig) -> Self {
        let name = if cfg.beta == 0.0 {
            "meanmdp"
        } else {
            "pomdplite"
        };
        UctPolicy {
            cfg,
            name: name.to_string(),
        }
    }
}

impl<M: PomdpLite> Policy<M> for UctPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(
        &mut self,
        model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        rng: &mut dyn RngCore,
    ) -> Result<Action> {
        uct_plan(model, b, s, &self.cfg, rng)
    }
}

/// Exact value iteration on the internal-reward MDP at every step.
#[derive(Clone, Debug)]
pub struct InternalViPolicy {
    pub cfg: PlannerConfig,
}

impl<M: PomdpLite> Policy<M> for InternalViPolicy {
    fn name(&self) -> &str {
        "pomdplite-vi"
    }

    fn act(
        &mut self,
        model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        _rng: &mut dyn RngCore,
    ) -> Result<Action> {
        let table = solve_internal_vi(model, b, s, &self.cfg)?;
        table.greedy(s).ok_or_else(|| {
            PliteError::State(format!("no legal actions at {}", model.state_name(&s.x)))
        })
    }
}

/// Finite-horizon Bayes-optimal lookahead.
#[derive(Clone, Debug)]
pub struct OraclePolicy {
    pub horizon: usize,
    pub node_cap: usize,
}

impl<M: PomdpLite> Policy<M> for OraclePolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn act(
        &mut self,
        model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        _rng: &mut dyn RngCore,
    ) -> Result<Action> {
        bayes_optimal_oracle(model, b, s, self.horizon, self.node_cap)?
            .action
            .ok_or_else(|| {
                PliteError::State(format!("no legal actions at {}", model.state_name(&s.x)))
            })
    }
}

/// Wraps a closure as a policy.
pub struct FnPolicy<F> {
    name: String,
    f: F,
}

impl<F> FnPolicy<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnPolicy {
            name: name.into(),
            f,
        }
    }
}

impl<M, F> Policy<M> for FnPolicy<F>
where
    M: PomdpLite,
    F: FnMut(&M, &Belief<M::Theta, M::Scalar>, &AugmentedState<M::X>) -> Result<Action>,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn act(
        &mut self,
        model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        _rng: &mut dyn RngCore,
    ) -> Result<Action> {
        (self.f)(model, b, s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<X> {
    pub state: AugmentedState<X>,
    pub action: Action,
    pub reward: f64,
    /// Belief the action was chosen under.
    pub belief: BeliefSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord<X, T> {
    pub seed: u64,
    pub theta_true: T,
    pub steps: Vec<StepRecord<X>>,
    pub final_state: AugmentedState<X>,
    pub discounted_return: f64,
    pub undiscounted_return: f64,
    /// Whether the episode ended in a terminal state.
    pub terminated: bool,
    pub wall_ms_per_step: f64,
}

impl<X, T> EpisodeRecord<X, T> {
    /// Σ γᵗ rₜ from the step log.
    pub fn recompute_return(&self, gamma: f64) -> f64 {
        let mut discount = 1.0;
        let mut total = 0.0;
        for step in &self.steps {
            total += discount * step.reward;
            discount *= gamma;
        }
        total
    }
}

/// A failed episode with everything recorded up to the failure.
#[derive(Clone, Debug)]
pub struct EpisodeFailure<X, T> {
    pub record: EpisodeRecord<X, T>,
    pub error: PliteError,
}

impl<X, T> std::fmt::Display for EpisodeFailure<X, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "episode failed after {} steps: {}",
            self.record.steps.len(),
            self.error
        )
    }
}

impl<X: std::fmt::Debug, T: std::fmt::Debug> std::error::Error for EpisodeFailure<X, T> {}

/// Plays one episode against `theta_true` until a terminal state or
/// `max_steps` actions.
pub fn run_agent_loop<M, P, R>(
    model: &M,
    theta_true: &M::Theta,
    b0: Belief<M::Theta, M::Scalar>,
    policy: &mut P,
    max_steps: usize,
    belief_cfg: &BeliefConfig,
    rng: &mut R,
) -> std::result::Result<EpisodeRecord<M::X, M::Theta>, EpisodeFailure<M::X, M::Theta>>
where
    M: PomdpLite,
    P: Policy<M> + ?Sized,
    R: Rng,
{
    let gamma = model.gamma().to_f64_lossy();
    let mut record = EpisodeRecord {
        seed: 0,
        theta_true: theta_true.clone(),
        steps: Vec::new(),
        final_state: AugmentedState::start(model.initial_x()),
        discounted_return: 0.0,
        undiscounted_return: 0.0,
        terminated: false,
        wall_ms_per_step: 0.0,
    };
    if max_steps == 0 {
        return Err(EpisodeFailure {
            record,
            error: PliteError::Argument("max_steps must be at least 1".into()),
        });
    }
    let mut theta = theta_true.clone();
    let mut b = b0;
    let mut s = AugmentedState::start(model.initial_x());
    let mut discount = 1.0;
    let started = Instant::now();
    let outcome = (|| -> Result<()> {
        while !model.is_terminal(&s.x) && record.steps.len() < max_steps {
            let a = policy.act(model, &b, &s, rng)?;
            let step = sample_step(model, &theta, &s, a, rng)?;
            let reward = step.reward.to_f64_lossy();
            record.steps.push(StepRecord {
                state: s.clone(),
                action: a,
                reward,
                belief: b.summary(),
            });
            record.discounted_return += discount * reward;
            record.undiscounted_return += reward;
            discount *= gamma;
            b = track_update(model, &b, &s, a, &step.next, belief_cfg, rng)?;
            s = step.next;
            theta = step.theta_next;
        }
        Ok(())
    })();
    record.final_state = s.clone();
    record.terminated = model.is_terminal(&s.x);
    let steps = record.steps.len().max(1) as f64;
    record.wall_ms_per_step = started.elapsed().as_secs_f64() * 1000.0 / steps;
    match outcome {
        Ok(()) => Ok(record),
        Err(error) => Err(EpisodeFailure { record, error }),
    }
}
