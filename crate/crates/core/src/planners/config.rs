use crate::belief::{BeliefConfig, BonusConfig};
use crate::error::{PliteError, Result};

/// Per-decision search budget.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Budget {
    /// Fixed number of simulations; reproducible for a fixed seed.
    Simulations(usize),
    /// Wall-clock limit in milliseconds.
    TimeMs(u64),
}

/// How UCT turns root statistics into a decision. Ties go to the lowest
/// action index either way.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RootSelection {
    /// Highest mean return among visited actions.
    MeanValue,
    /// Most simulations, then highest mean.
    Visits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Bonus scale β.
    pub beta: f64,
    /// Sup-norm tolerance on the value error.
    pub vi_tolerance: f64,
    pub vi_max_iters: usize,
    /// Largest state space value iteration will enumerate.
    pub vi_state_cap: usize,
    /// UCB exploration constant; `None` uses the model's return range.
    pub uct_exploration_c: Option<f64>,
    pub budget: Budget,
    pub rollout_depth_cap: usize,
    pub root_selection: RootSelection,
    /// Sample one θ per simulation and carry it through φ instead of
    /// drawing θ ~ b at every step.
    pub persist_theta: bool,
    pub bonus: BonusConfig,
    pub belief: BeliefConfig,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            beta: 1.0,
            vi_tolerance: 1e-6,
            vi_max_iters: 100_000,
            vi_state_cap: 1 << 20,
            uct_exploration_c: None,
            budget: Budget::Simulations(10_000),
            rollout_depth_cap: 90,
            root_selection: RootSelection::MeanValue,
            persist_theta: false,
            bonus: BonusConfig::default(),
            belief: BeliefConfig::default(),
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The same configuration with the bonus switched off.
    pub fn mean_mdp(&self) -> Self {
        PlannerConfig {
            beta: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(PliteError::Argument(format!(
                "beta must be finite and nonnegative, got {}",
                self.beta
            )));
        }
        if !(self.vi_tolerance > 0.0) {
            return Err(PliteError::Argument("vi tolerance must be positive".into()));
        }
        if self.rollout_depth_cap == 0 {
            return Err(PliteError::Argument(
                "rollout depth cap must be at least 1".into(),
            ));
        }
        match self.budget {
            Budget::Simulations(0) | Budget::TimeMs(0) => {
                return Err(PliteError::Argument(
                    "search budget must be positive".into(),
                ))
            }
            _ => {}
        }
        if let Some(c) = self.uct_exploration_c {
            if !(c.is_finite() && c >= 0.0) {
                return Err(PliteError::Argument(format!(
                    "exploration constant must be nonnegative, got {c}"
                )));
            }
        }
        Ok(())
    }
}
