//! The POMDP-lite model abstraction and its view as a family of MDPs, one
//! per hidden value.
//!
//! A model is the tuple (X, Θ, A, O, T, Z, R, γ) plus a deterministic hidden
//! dynamics map φ. Fixing θ turns it into an ordinary MDP over augmented
//! states (x, õ) where õ is the last observation or `null`; that MDP is
//! exposed by [`IndexedMdpView`].

use num_traits::{One, Zero};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;

use crate::belief::Belief;
use crate::error::{PliteError, Result};
use crate::scalar::Scalar;

/// Index of an action in the model's global action table. Lower indices
/// win ties everywhere.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub u16);

impl Action {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An element of O ∪ {null}.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    /// No observation received.
    Null,
    Obs(u16),
}

/// MDP state of the transformed model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AugmentedState<X> {
    pub x: X,
    pub obs: Observation,
}

impl<X> AugmentedState<X> {
    pub fn new(x: X, obs: Observation) -> Self {
        AugmentedState { x, obs }
    }

    /// The start state of an episode: no observation yet.
    pub fn start(x: X) -> Self {
        AugmentedState {
            x,
            obs: Observation::Null,
        }
    }
}

/// Finite-support distribution as `(outcome, mass)` pairs.
pub type Dist<T, F> = SmallVec<[(T, F); 4]>;

/// How the hidden parameter space is made available.
#[derive(Clone, Debug)]
pub enum HiddenSpace<T> {
    /// Θ = {θ₀, …, θ_{N−1}} listed in index order.
    Enumerated(Arc<[T]>),
    /// Θ too large to list; only the prior sampler is available.
    Generative { size_hint: f64 },
}

impl<T> HiddenSpace<T> {
    pub fn len(&self) -> Option<usize> {
        match self {
            HiddenSpace::Enumerated(values) => Some(values.len()),
            HiddenSpace::Generative { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }
}

/// Draws one outcome from an enumerated distribution. The last entry
/// absorbs rounding slack.
pub fn sample_dist<'a, T, F: Scalar, R: Rng + ?Sized>(dist: &'a Dist<T, F>, rng: &mut R) -> &'a T {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (item, p) in dist.iter() {
        acc += p.to_f64_lossy();
        if u < acc {
            return item;
        }
    }
    // Zero-mass tails never win; pick the last positive entry.
    dist.iter()
        .rev()
        .find(|(_, p)| *p > F::zero())
        .map(|(item, _)| item)
        .unwrap_or(&dist[dist.len() - 1].0)
}

/// A POMDP-lite model behind a uniform query interface.
///
/// Implementations are immutable once built and shared read-only between
/// concurrent workers; every sampling method takes the caller's RNG.
pub trait PomdpLite: Send + Sync {
    type Scalar: Scalar;
    /// Fully observable state.
    type X: Clone + Eq + Hash + Debug + Send + Sync;
    /// Hidden parameter value.
    type Theta: Clone + Eq + Hash + Debug + Send + Sync;

    fn hidden_space(&self) -> HiddenSpace<Self::Theta>;

    /// Prior mass of θ. Only queried for enumerated spaces.
    fn prior_weight(&self, theta: &Self::Theta) -> Self::Scalar;

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Theta;

    fn num_actions(&self) -> usize;

    /// Writes the actions legal at `x` into `out` in ascending index order.
    /// Terminal states have none.
    fn legal_actions_into(&self, x: &Self::X, out: &mut Vec<Action>);

    fn legal_actions(&self, x: &Self::X) -> Vec<Action> {
        let mut out = Vec::new();
        self.legal_actions_into(x, &mut out);
        out
    }

    fn is_legal(&self, x: &Self::X, a: Action) -> bool {
        self.legal_actions(x).contains(&a)
    }

    /// Uniform draw from the legal actions at `x`.
    fn random_legal_action<R: Rng + ?Sized>(&self, x: &Self::X, rng: &mut R) -> Option<Action> {
        let legal = self.legal_actions(x);
        if legal.is_empty() {
            None
        } else {
            Some(legal[rng.gen_range(0..legal.len())])
        }
    }

    /// P(x′ | θ, x, a).
    fn transition(
        &self,
        theta: &Self::Theta,
        x: &Self::X,
        a: Action,
    ) -> Dist<Self::X, Self::Scalar>;

    /// P(o | θ′, x′, a), over O ∪ {null}.
    fn observation(
        &self,
        theta_next: &Self::Theta,
        x_next: &Self::X,
        a: Action,
    ) -> Dist<Observation, Self::Scalar>;

    /// R(θ, x, a).
    fn reward(&self, theta: &Self::Theta, x: &Self::X, a: Action) -> Self::Scalar;

    fn gamma(&self) -> Self::Scalar;

    fn initial_x(&self) -> Self::X;

    fn is_terminal(&self, x: &Self::X) -> bool;

    /// φ(θ, x, a): hidden value after taking `a` at `x`.
    fn advance(&self, theta: &Self::Theta, _x: &Self::X, _a: Action) -> Self::Theta {
        theta.clone()
    }

    /// True when φ is the identity.
    fn is_static(&self) -> bool {
        true
    }

    /// Cache key for belief-dependent quantities. Two pairs with the same
    /// key must have the same mean reward and the same per-θ likelihood
    /// profile over next states (up to relabelling of outcomes).
    fn outcome_key(&self, _x: &Self::X, _a: Action) -> Option<u64> {
        None
    }

    /// Rebuilds a depleted particle belief so that it is consistent with
    /// everything observed up to `s`. Domains without a constraint-aware
    /// sampler return `None`.
    fn reinvigorate<R: Rng + ?Sized>(
        &self,
        _belief: &Belief<Self::Theta, Self::Scalar>,
        _s: &AugmentedState<Self::X>,
        _target: usize,
        _rng: &mut R,
    ) -> Option<Belief<Self::Theta, Self::Scalar>> {
        None
    }

    /// Number of non-null observations.
    fn num_observations(&self) -> usize;

    /// Every observable state, for tabular models.
    fn enumerate_states(&self) -> Option<Vec<Self::X>> {
        None
    }

    /// Spread between best and worst per-episode return, used as the
    /// default UCT exploration constant.
    fn return_range_hint(&self) -> f64 {
        1.0
    }

    fn action_name(&self, a: Action) -> String {
        format!("a{}", a.0)
    }

    fn observation_name(&self, o: Observation) -> String {
        match o {
            Observation::Null => "null".to_string(),
            Observation::Obs(k) => format!("o{k}"),
        }
    }

    fn theta_name(&self, theta: &Self::Theta) -> String {
        format!("{theta:?}")
    }

    fn state_name(&self, x: &Self::X) -> String {
        format!("{x:?}")
    }
}

/// Outcome of one simulated step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<X, T, F> {
    pub next: AugmentedState<X>,
    pub theta_next: T,
    pub reward: F,
}

/// The MDP obtained by fixing the current hidden value.
///
/// States are augmented states; the transition mass of s′ = (x′, õ′) is
/// P(õ′ | φ(θ,x,a), x′, a) · P(x′ | θ, x, a) and the reward is R(θ, x, a).
pub struct IndexedMdpView<'m, M: PomdpLite> {
    model: &'m M,
    theta: M::Theta,
}

impl<'m, M: PomdpLite> IndexedMdpView<'m, M> {
    pub fn theta(&self) -> &M::Theta {
        &self.theta
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn gamma(&self) -> M::Scalar {
        self.model.gamma()
    }

    pub fn reward(&self, s: &AugmentedState<M::X>, a: Action) -> M::Scalar {
        self.model.reward(&self.theta, &s.x, a)
    }

    /// Hidden value after `a` at `s`.
    pub fn next_theta(&self, s: &AugmentedState<M::X>, a: Action) -> M::Theta {
        self.model.advance(&self.theta, &s.x, a)
    }

    pub fn transition(
        &self,
        s: &AugmentedState<M::X>,
        a: Action,
    ) -> Dist<AugmentedState<M::X>, M::Scalar> {
        augmented_transition(self.model, &self.theta, &s.x, a)
    }

    /// View of the same model re-indexed at φ(θ, x, a), for walking past
    /// one step when the hidden value moves.
    pub fn step(&self, s: &AugmentedState<M::X>, a: Action) -> IndexedMdpView<'m, M> {
        IndexedMdpView {
            model: self.model,
            theta: self.next_theta(s, a),
        }
    }
}

/// T(θ, s, a, ·) over augmented states. Terminal states absorb.
pub fn augmented_transition<M: PomdpLite>(
    model: &M,
    theta: &M::Theta,
    x: &M::X,
    a: Action,
) -> Dist<AugmentedState<M::X>, M::Scalar> {
    let mut out: Dist<AugmentedState<M::X>, M::Scalar> = SmallVec::new();
    if model.is_terminal(x) {
        out.push((AugmentedState::start(x.clone()), M::Scalar::one()));
        return out;
    }
    let theta_next = model.advance(theta, x, a);
    for (x_next, px) in model.transition(theta, x, a) {
        if px == M::Scalar::zero() {
            continue;
        }
        for (o, po) in model.observation(&theta_next, &x_next, a) {
            if po == M::Scalar::zero() {
                continue;
            }
            out.push((AugmentedState::new(x_next.clone(), o), px * po));
        }
    }
    out
}

/// Likelihood T(θ, s, a, s′) of a single outcome.
pub fn transition_likelihood<M: PomdpLite>(
    model: &M,
    theta: &M::Theta,
    x: &M::X,
    a: Action,
    next: &AugmentedState<M::X>,
) -> M::Scalar {
    if model.is_terminal(x) {
        let absorbed = next.x == *x && next.obs == Observation::Null;
        return if absorbed {
            M::Scalar::one()
        } else {
            M::Scalar::zero()
        };
    }
    let theta_next = model.advance(theta, x, a);
    let mut total = M::Scalar::zero();
    for (x_next, px) in model.transition(theta, x, a) {
        if x_next != next.x || px == M::Scalar::zero() {
            continue;
        }
        for (o, po) in model.observation(&theta_next, &x_next, a) {
            if o == next.obs {
                total = total + px * po;
            }
        }
    }
    total
}

/// The MDP indexed by the `theta_index`-th hidden value.
pub fn indexed_mdp_view<M: PomdpLite>(
    model: &M,
    theta_index: usize,
) -> Result<IndexedMdpView<'_, M>> {
    match model.hidden_space() {
        HiddenSpace::Enumerated(values) => {
            let theta = values.get(theta_index).cloned().ok_or_else(|| {
                PliteError::Argument(format!(
                    "theta index {theta_index} out of range 0..{}",
                    values.len()
                ))
            })?;
            Ok(IndexedMdpView { model, theta })
        }
        HiddenSpace::Generative { .. } => Err(PliteError::Unsupported(
            "indexed views need an enumerated hidden space; use view_for".into(),
        )),
    }
}

/// The MDP for an explicit hidden value.
pub fn view_for<M: PomdpLite>(model: &M, theta: M::Theta) -> IndexedMdpView<'_, M> {
    IndexedMdpView { model, theta }
}

/// Legal actions at an augmented state; empty when terminal.
pub fn legal_actions<M: PomdpLite>(model: &M, s: &AugmentedState<M::X>) -> Vec<Action> {
    if model.is_terminal(&s.x) {
        Vec::new()
    } else {
        model.legal_actions(&s.x)
    }
}

/// Samples s′ from the indexed MDP, advances θ through φ and reports R(θ, x, a).
pub fn sample_step<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    theta: &M::Theta,
    s: &AugmentedState<M::X>,
    a: Action,
    rng: &mut R,
) -> Result<StepOutcome<M::X, M::Theta, M::Scalar>> {
    if model.is_terminal(&s.x) {
        return Err(PliteError::State(format!(
            "cannot step from terminal state {}",
            model.state_name(&s.x)
        )));
    }
    if !model.is_legal(&s.x, a) {
        return Err(PliteError::Argument(format!(
            "action {} is not legal at {}",
            model.action_name(a),
            model.state_name(&s.x)
        )));
    }
    Ok(sample_step_unchecked(model, theta, &s.x, a, rng))
}

/// [`sample_step`] without the legality checks, for inner planning loops.
pub fn sample_step_unchecked<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    theta: &M::Theta,
    x: &M::X,
    a: Action,
    rng: &mut R,
) -> StepOutcome<M::X, M::Theta, M::Scalar> {
    let reward = model.reward(theta, x, a);
    let theta_next = model.advance(theta, x, a);
    let xs = model.transition(theta, x, a);
    let x_next = sample_dist(&xs, rng).clone();
    let os = model.observation(&theta_next, &x_next, a);
    let obs = *sample_dist(&os, rng);
    StepOutcome {
        next: AugmentedState::new(x_next, obs),
        theta_next,
        reward,
    }
}

/// θᵗ = φ(θ⁰, hₜ), folding the hidden dynamics over a history of (x, a) pairs.
pub fn history_fold<M: PomdpLite>(
    model: &M,
    theta0: &M::Theta,
    transitions: &[(M::X, Action)],
) -> M::Theta {
    if model.is_static() {
        return theta0.clone();
    }
    transitions
        .iter()
        .fold(theta0.clone(), |theta, (x, a)| model.advance(&theta, x, *a))
}

/// Checks that every T and Z row reachable from the enumerated states sums
/// to one within `tol` and has nonnegative entries.
pub fn check_normalization<M: PomdpLite>(model: &M, tol: f64) -> Result<()> {
    let thetas = match model.hidden_space() {
        HiddenSpace::Enumerated(v) => v,
        HiddenSpace::Generative { .. } => {
            return Err(PliteError::Unsupported("generative hidden space".into()))
        }
    };
    let states = model
        .enumerate_states()
        .ok_or_else(|| PliteError::Unsupported("model does not enumerate its states".into()))?;
    for theta in thetas.iter() {
        for x in &states {
            for a in model.legal_actions(x) {
                let row = model.transition(theta, x, a);
                check_row(&row, tol, || format!("T({theta:?}, {x:?}, {a:?})"))?;
                let theta_next = model.advance(theta, x, a);
                for (x_next, _) in row.iter() {
                    let z = model.observation(&theta_next, x_next, a);
                    check_row(&z, tol, || format!("Z({theta_next:?}, {x_next:?}, {a:?})"))?;
                }
            }
        }
    }
    Ok(())
}

fn check_row<T, F: Scalar>(row: &Dist<T, F>, tol: f64, label: impl Fn() -> String) -> Result<()> {
    if row.iter().any(|(_, p)| *p < F::zero()) {
        return Err(PliteError::Argument(format!(
            "{} has a negative entry",
            label()
        )));
    }
    let total: F = row.iter().map(|(_, p)| *p).sum();
    if !total.approx_eq(F::one(), tol) {
        return Err(PliteError::Argument(format!("{} sums to {total}", label())));
    }
    Ok(())
}
