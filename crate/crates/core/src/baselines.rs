//! Comparison policies: Mean MDP, QMDP and uniform random.

use std::sync::Arc;

use rand::{Rng, RngCore};
use rustc_hash::FxHashMap;

use crate::belief::Belief;
use crate::error::{PliteError, Result};
use crate::model::{view_for, Action, AugmentedState, HiddenSpace, PomdpLite};
use crate::planners::vi::argmax;
use crate::planners::{reachable_states, solve_mdp, uct_plan, PlannerConfig, Policy, ValueTable};
use crate::scalar::Scalar;

/// Tolerance the per-θ QMDP solves run to.
pub const QMDP_TOLERANCE: f64 = 1e-9;

/// The internal-reward UCT planner with β forced to 0.
pub fn mean_mdp_policy<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<Action> {
    uct_plan(model, b, s, &cfg.mean_mdp(), rng)
}

/// Per-θ optimal Q tables, combined linearly under a belief.
#[derive(Clone, Debug)]
pub struct QmdpSolution<X, T, F> {
    thetas: Arc<[T]>,
    lookup: FxHashMap<T, usize>,
    tables: Vec<ValueTable<X, F>>,
}

impl<X, T, F> QmdpSolution<X, T, F>
where
    X: Clone + Eq + std::hash::Hash,
    T: Clone + Eq + std::hash::Hash,
    F: Scalar,
{
    /// Solves every indexed MDP over the union of the states any θ can
    /// reach from `roots`.
    pub fn solve<M>(
        model: &M,
        roots: &[AugmentedState<X>],
        tolerance: f64,
        max_iters: usize,
        state_cap: usize,
    ) -> Result<Self>
    where
        M: PomdpLite<X = X, Theta = T, Scalar = F>,
    {
        let thetas = match model.hidden_space() {
            HiddenSpace::Enumerated(values) => values,
            HiddenSpace::Generative { .. } => {
                return Err(PliteError::Unsupported(
                    "QMDP needs an enumerated hidden space".into(),
                ))
            }
        };
        let mut union: Vec<AugmentedState<X>> = Vec::new();
        let mut seen: FxHashMap<AugmentedState<X>, ()> = FxHashMap::default();
        for i in 0..thetas.len() {
            for s in reachable_states(&view_for(model, thetas[i].clone()), roots, state_cap)? {
                if seen.insert(s.clone(), ()).is_none() {
                    union.push(s);
                }
            }
        }
        let tables = (0..thetas.len())
            .map(|i| {
                solve_mdp(
                    &view_for(model, thetas[i].clone()),
                    &union,
                    tolerance,
                    max_iters,
                    state_cap,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let lookup = thetas
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(QmdpSolution {
            thetas,
            lookup,
            tables,
        })
    }

    pub fn thetas(&self) -> &Arc<[T]> {
        &self.thetas
    }

    /// Q*_θ table of the `i`-th hidden value.
    pub fn table(&self, i: usize) -> &ValueTable<X, F> {
        &self.tables[i]
    }

    /// Σᵢ b(θᵢ) Q*_θᵢ(s, a) for every legal action at `s`.
    pub fn q_row(&self, b: &Belief<T, F>, s: &AugmentedState<X>) -> Result<Vec<(Action, F)>> {
        let mut row: Option<Vec<(Action, F)>> = None;
        for (_, theta, w) in b.support() {
            let i = *self.lookup.get(theta).ok_or_else(|| {
                PliteError::Argument("belief atom outside the solved hidden space".into())
            })?;
            let q = self.tables[i]
                .q_row(s)
                .ok_or_else(|| PliteError::State("state outside the solved region".into()))?;
            let acc = row.get_or_insert_with(|| q.iter().map(|&(a, _)| (a, F::zero())).collect());
            for (slot, &(_, v)) in acc.iter_mut().zip(q.iter()) {
                slot.1 = slot.1 + w * v;
            }
        }
        Ok(row.unwrap_or_default())
    }

    /// max_a Σᵢ b(θᵢ) Q*_θᵢ(s, a); zero at terminal states.
    pub fn value(&self, b: &Belief<T, F>, s: &AugmentedState<X>) -> Result<F> {
        let row = self.q_row(b, s)?;
        Ok(row
            .iter()
            .map(|&(_, q)| q)
            .fold(None, |best: Option<F>, q| match best {
                Some(v) if v >= q => Some(v),
                _ => Some(q),
            })
            .unwrap_or_else(F::zero))
    }

    pub fn action(&self, b: &Belief<T, F>, s: &AugmentedState<X>) -> Result<Action> {
        argmax(&self.q_row(b, s)?).ok_or_else(|| PliteError::State("no legal actions".into()))
    }
}

/// argmax_a Σᵢ b(θᵢ) Q*_θᵢ(s, a), lowest index on ties.
pub fn qmdp_policy<M: PomdpLite>(
    solution: &QmdpSolution<M::X, M::Theta, M::Scalar>,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
) -> Result<Action> {
    solution.action(b, s)
}

/// Shares one offline solution across episodes.
pub struct QmdpPolicy<M: PomdpLite> {
    pub solution: Arc<QmdpSolution<M::X, M::Theta, M::Scalar>>,
}

impl<M: PomdpLite> Policy<M> for QmdpPolicy<M> {
    fn name(&self) -> &str {
        "qmdp"
    }

    fn act(
        &mut self,
        _model: &M,
        b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        _rng: &mut dyn RngCore,
    ) -> Result<Action> {
        self.solution.action(b, s)
    }
}

/// Uniform over the legal actions at `s`.
pub fn random_policy<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    s: &AugmentedState<M::X>,
    rng: &mut R,
) -> Result<Action> {
    if model.is_terminal(&s.x) {
        return Err(PliteError::State(format!(
            "no legal actions at terminal state {}",
            model.state_name(&s.x)
        )));
    }
    model
        .random_legal_action(&s.x, rng)
        .ok_or_else(|| PliteError::State(format!("no legal actions at {}", model.state_name(&s.x))))
}

#[derive(Clone, Debug, Default)]
pub struct RandomPolicy;

impl<M: PomdpLite> Policy<M> for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(
        &mut self,
        model: &M,
        _b: &Belief<M::Theta, M::Scalar>,
        s: &AugmentedState<M::X>,
        rng: &mut dyn RngCore,
    ) -> Result<Action> {
        random_policy(model, s, rng)
    }
}
