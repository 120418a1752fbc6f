//! Executable checks for the sample-complexity analysis: the Dirichlet
//! bonus in closed form, and known-set bookkeeping over visits.

use std::hash::Hash;

use num_traits::Zero;
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::belief::{bayes_update, mean_reward, outcome_table, reward_bonus, Belief};
use crate::error::{PliteError, Result};
use crate::model::{sample_step, view_for, Action, AugmentedState, IndexedMdpView, PomdpLite};
use crate::scalar::Scalar;

/// Dirichlet pseudo-counts over the outcomes of one (s, a) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletCounts<F> {
    alpha: Vec<F>,
}

impl<F: Scalar> DirichletCounts<F> {
    pub fn new(alpha: Vec<F>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(PliteError::Argument(
                "need at least one pseudo-count".into(),
            ));
        }
        if let Some(bad) = alpha.iter().find(|a| **a <= F::zero()) {
            return Err(PliteError::Argument(format!(
                "pseudo-counts must be positive, got {bad}"
            )));
        }
        Ok(DirichletCounts { alpha })
    }

    pub fn alpha(&self) -> &[F] {
        &self.alpha
    }

    pub fn alpha0(&self) -> F {
        self.alpha.iter().copied().sum()
    }

    /// Posterior counts after observing outcome `j`.
    pub fn observe(&self, j: usize) -> Self {
        let mut alpha = self.alpha.clone();
        alpha[j] = alpha[j] + F::one();
        DirichletCounts { alpha }
    }
}

/// β times the expected L1 change of the predictive distribution after one
/// more observation.
pub fn dirichlet_bonus_exact<F: Scalar>(counts: &DirichletCounts<F>, beta: F) -> F {
    let a0 = counts.alpha0();
    let a1 = a0 + F::one();
    let shrink = F::one() / a0 - F::one() / a1;
    let mut total = F::zero();
    for (k, &ak) in counts.alpha.iter().enumerate() {
        let others: F = counts
            .alpha
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, &aj)| aj * shrink)
            .sum();
        let own = (ak + F::one()) / a1 - ak / a0;
        total = total + ak / a0 * (others + own);
    }
    beta * total
}

/// 2β / (1 + α₀).
pub fn dirichlet_bound<F: Scalar>(counts: &DirichletCounts<F>, beta: F) -> F {
    F::from_count(2) * beta / (F::one() + counts.alpha0())
}

/// E[bonus after one more observation], averaging over the predictive.
pub fn dirichlet_expected_next_bonus<F: Scalar>(counts: &DirichletCounts<F>, beta: F) -> F {
    let a0 = counts.alpha0();
    counts
        .alpha
        .iter()
        .enumerate()
        .map(|(j, &aj)| aj / a0 * dirichlet_bonus_exact(&counts.observe(j), beta))
        .sum()
}

/// Bonus before each observation of `outcomes` and after the last one.
pub fn dirichlet_trace<F: Scalar>(
    counts: &DirichletCounts<F>,
    outcomes: &[usize],
    beta: F,
) -> Vec<F> {
    let mut current = counts.clone();
    let mut trace = vec![dirichlet_bonus_exact(&current, beta)];
    for &j in outcomes {
        current = current.observe(j);
        trace.push(dirichlet_bonus_exact(&current, beta));
    }
    trace
}

/// Observations after which the bound 2β/(1 + α₀) first drops below κ.
pub fn dirichlet_visits_to_known(alpha0: f64, beta: f64, kappa: f64) -> usize {
    let mut n = 0;
    while 2.0 * beta / (1.0 + alpha0 + n as f64) >= kappa {
        n += 1;
    }
    n
}

/// κ = ε(1 − γ) with ε = 0.1.
pub fn default_kappa(gamma: f64) -> f64 {
    0.1 * (1.0 - gamma)
}

/// One logged visit.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub s: String,
    pub a: String,
    pub visit: usize,
    pub bonus: f64,
    /// Visit at which the pair became known, once it has.
    pub known_at: Option<usize>,
}

/// A visit whose bonus exceeded the previous visit's.
#[derive(Clone, Debug, PartialEq)]
pub struct BonusIncrease {
    pub s: String,
    pub a: String,
    pub visit: usize,
    pub previous: f64,
    pub current: f64,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct VisitReport {
    pub visit: usize,
    pub bonus: f64,
    pub known: bool,
    /// False when the pair was already known and updates are frozen.
    pub update_belief: bool,
}

/// Visit counts and known-pair bookkeeping keyed by (x, a).
#[derive(Clone, Debug)]
pub struct KnownSetTracker<X> {
    pub kappa: f64,
    /// Skip belief updates on pairs already known.
    pub freeze: bool,
    visits: FxHashMap<(X, Action), usize>,
    known_at: FxHashMap<(X, Action), usize>,
    last_bonus: FxHashMap<(X, Action), f64>,
    pub rows: Vec<TraceRow>,
    pub increases: Vec<BonusIncrease>,
}

impl<X: Clone + Eq + Hash> KnownSetTracker<X> {
    pub fn new(kappa: f64, freeze: bool) -> Self {
        KnownSetTracker {
            kappa,
            freeze,
            visits: FxHashMap::default(),
            known_at: FxHashMap::default(),
            last_bonus: FxHashMap::default(),
            rows: Vec::new(),
            increases: Vec::new(),
        }
    }

    pub fn visits(&self, x: &X, a: Action) -> usize {
        self.visits.get(&(x.clone(), a)).copied().unwrap_or(0)
    }

    pub fn known_at(&self, x: &X, a: Action) -> Option<usize> {
        self.known_at.get(&(x.clone(), a)).copied()
    }

    pub fn is_known(&self, x: &X, a: Action) -> bool {
        self.known_at.contains_key(&(x.clone(), a))
    }

    pub fn known_count(&self) -> usize {
        self.known_at.len()
    }

    pub fn visited_count(&self) -> usize {
        self.visits.len()
    }

    /// ζ̂(x, a): visits whose samples were needed before the pair became
    /// known, one per known pair.
    pub fn zeta(&self) -> Vec<((X, Action), usize)> {
        self.known_at
            .iter()
            .map(|(k, v)| (k.clone(), v - 1))
            .collect()
    }
}

/// Logs a visit of (s, a) under belief `b`. The pair becomes known on the
/// first visit at which its bonus is below κ.
pub fn known_set_step<M: PomdpLite>(
    tracker: &mut KnownSetTracker<M::X>,
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    beta: M::Scalar,
) -> VisitReport {
    let key = (s.x.clone(), a);
    let was_known = tracker.known_at.contains_key(&key);
    let visit = {
        let n = tracker.visits.entry(key.clone()).or_insert(0);
        *n += 1;
        *n
    };
    let bonus = reward_bonus(model, b, s, a, beta).to_f64_lossy();
    if let Some(&previous) = tracker.last_bonus.get(&key) {
        if bonus > previous + 1e-12 {
            tracker.increases.push(BonusIncrease {
                s: model.state_name(&s.x),
                a: model.action_name(a),
                visit,
                previous,
                current: bonus,
            });
        }
    }
    tracker.last_bonus.insert(key.clone(), bonus);
    if !was_known && bonus < tracker.kappa {
        tracker.known_at.insert(key.clone(), visit);
    }
    let known_at = tracker.known_at.get(&key).copied();
    tracker.rows.push(TraceRow {
        s: model.state_name(&s.x),
        a: model.action_name(a),
        visit,
        bonus,
        known_at,
    });
    VisitReport {
        visit,
        bonus,
        known: known_at.is_some(),
        update_belief: !(tracker.freeze && was_known),
    }
}

#[derive(Clone, Debug)]
pub struct SampleComplexityReport<X> {
    pub tracker: KnownSetTracker<X>,
    pub steps: usize,
    pub episodes: usize,
}

impl<X: Clone + Eq + Hash> SampleComplexityReport<X> {
    pub fn max_zeta(&self) -> usize {
        self.tracker
            .zeta()
            .into_iter()
            .map(|(_, z)| z)
            .max()
            .unwrap_or(0)
    }
}

/// Random exploration under a hidden value drawn from `prior`, logging
/// every visit. Episodes restart from the initial state; the belief
/// persists across them.
pub fn sample_complexity_experiment<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    prior: &Belief<M::Theta, M::Scalar>,
    beta: M::Scalar,
    kappa: f64,
    max_steps: usize,
    freeze: bool,
    rng: &mut R,
) -> Result<SampleComplexityReport<M::X>> {
    let mut theta = prior.atoms()[prior.sample_index(rng)].clone();
    let origin = theta.clone();
    let mut b = prior.clone();
    let mut tracker = KnownSetTracker::new(kappa, freeze);
    let mut s = AugmentedState::start(model.initial_x());
    let mut episodes = 1;
    for _ in 0..max_steps {
        if model.is_terminal(&s.x) {
            s = AugmentedState::start(model.initial_x());
            theta = origin.clone();
            episodes += 1;
        }
        let a = model.random_legal_action(&s.x, rng).ok_or_else(|| {
            PliteError::State(format!("no legal actions at {}", model.state_name(&s.x)))
        })?;
        let report = known_set_step(&mut tracker, model, &b, &s, a, beta);
        let step = sample_step(model, &theta, &s, a, rng)?;
        if report.update_belief {
            b = bayes_update(model, &b, &s, a, &step.next)?;
        }
        s = step.next;
        theta = step.theta_next;
    }
    Ok(SampleComplexityReport {
        tracker,
        steps: max_steps,
        episodes,
    })
}

/// Expected discounted return of a fixed action sequence from (b, s) on the
/// joint dynamics, with the belief updated after every branch. Actions
/// past a terminal state earn nothing.
pub fn open_loop_return_belief<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    actions: &[Action],
) -> Result<M::Scalar> {
    let Some((&a, rest)) = actions.split_first() else {
        return Ok(M::Scalar::zero());
    };
    if model.is_terminal(&s.x) {
        return Ok(M::Scalar::zero());
    }
    let mut value = mean_reward(model, b, s, a);
    for column in outcome_table(model, b, s, a) {
        if column.mass <= M::Scalar::zero() {
            continue;
        }
        let posterior = bayes_update(model, b, s, a, &column.next)?;
        let future = open_loop_return_belief(model, &posterior, &column.next, rest)?;
        value = value + model.gamma() * column.mass * future;
    }
    Ok(value)
}

/// The same return as Σᵢ b(θᵢ) times the return in the MDP indexed by θᵢ.
pub fn open_loop_return_mixture<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    actions: &[Action],
) -> M::Scalar {
    b.support()
        .map(|(_, theta, w)| w * indexed_return(&view_for(model, theta.clone()), s, actions))
        .sum()
}

fn indexed_return<M: PomdpLite>(
    view: &IndexedMdpView<'_, M>,
    s: &AugmentedState<M::X>,
    actions: &[Action],
) -> M::Scalar {
    let Some((&a, rest)) = actions.split_first() else {
        return M::Scalar::zero();
    };
    if view.model().is_terminal(&s.x) {
        return M::Scalar::zero();
    }
    let next_view = view.step(s, a);
    let future: M::Scalar = view
        .transition(s, a)
        .into_iter()
        .map(|(next, p)| p * indexed_return(&next_view, &next, rest))
        .sum();
    view.reward(s, a) + view.gamma() * future
}
