//! Beliefs over the hidden parameter, Bayes updates, the mean model and
//! the L1 information-gain bonus.
//!
//! An exact belief keeps one weight per enumerated hidden value; a particle
//! belief keeps a weighted multiset. Both share one representation: a
//! shared slice of atoms plus a weight vector. Divergences compare weights
//! atom by atom, so two beliefs are comparable only when they index the
//! same atoms.

use num_traits::Zero;
use std::sync::Arc;

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{PliteError, Result};
use crate::model::{
    augmented_transition, sample_dist, transition_likelihood, Action, AugmentedState, HiddenSpace,
    PomdpLite,
};
use crate::scalar::Scalar;

/// Normalization tolerance for beliefs.
pub const BELIEF_TOLERANCE: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BeliefKind {
    Exact,
    Particle,
}

#[derive(Clone, Debug)]
pub struct Belief<T, F> {
    kind: BeliefKind,
    atoms: Arc<[T]>,
    weights: Vec<F>,
}

impl<T: Clone + PartialEq, F: Scalar> Belief<T, F> {
    /// Exact belief from normalized weights.
    pub fn exact(atoms: Arc<[T]>, weights: Vec<F>) -> Result<Self> {
        Self::checked(BeliefKind::Exact, atoms, weights)
    }

    /// Particle belief from normalized weights.
    pub fn weighted_particles(atoms: Arc<[T]>, weights: Vec<F>) -> Result<Self> {
        Self::checked(BeliefKind::Particle, atoms, weights)
    }

    /// Equal-weight particle belief.
    pub fn particles(atoms: Vec<T>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(PliteError::Argument(
                "particle belief needs at least one particle".into(),
            ));
        }
        let w = F::one() / F::from_count(atoms.len());
        let weights = vec![w; atoms.len()];
        Ok(Belief {
            kind: BeliefKind::Particle,
            atoms: atoms.into(),
            weights,
        })
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn from_unnormalized(kind: BeliefKind, atoms: Arc<[T]>, weights: Vec<F>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(PliteError::Argument(format!(
                "{} weights for {} atoms",
                weights.len(),
                atoms.len()
            )));
        }
        if weights.iter().any(|w| *w < F::zero()) {
            return Err(PliteError::Argument("negative belief weight".into()));
        }
        let total: F = weights.iter().copied().sum();
        if total <= F::zero() {
            return Err(PliteError::Argument(
                "belief weights have zero total".into(),
            ));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Belief {
            kind,
            atoms,
            weights,
        })
    }

    /// Point mass on `atoms[index]`.
    pub fn point(atoms: Arc<[T]>, index: usize) -> Result<Self> {
        if index >= atoms.len() {
            return Err(PliteError::Argument(format!(
                "index {index} out of range 0..{}",
                atoms.len()
            )));
        }
        let mut weights = vec![F::zero(); atoms.len()];
        weights[index] = F::one();
        Ok(Belief {
            kind: BeliefKind::Exact,
            atoms,
            weights,
        })
    }

    fn checked(kind: BeliefKind, atoms: Arc<[T]>, weights: Vec<F>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(PliteError::Argument("belief over an empty space".into()));
        }
        if atoms.len() != weights.len() {
            return Err(PliteError::Argument(format!(
                "{} weights for {} atoms",
                weights.len(),
                atoms.len()
            )));
        }
        if weights.iter().any(|w| *w < F::zero()) {
            return Err(PliteError::Argument("negative belief weight".into()));
        }
        let total: F = weights.iter().copied().sum();
        if !total.approx_eq(F::one(), BELIEF_TOLERANCE) {
            return Err(PliteError::Argument(format!(
                "belief weights sum to {total}, expected 1"
            )));
        }
        Ok(Belief {
            kind,
            atoms,
            weights,
        })
    }

    pub fn kind(&self) -> BeliefKind {
        self.kind
    }

    pub fn atoms(&self) -> &Arc<[T]> {
        &self.atoms
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms with positive weight, as `(index, atom, weight)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, &T, F)> + '_ {
        self.atoms
            .iter()
            .zip(self.weights.iter())
            .enumerate()
            .filter(|(_, (_, w))| **w > F::zero())
            .map(|(i, (t, w))| (i, t, *w))
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > F::zero()).count()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support_size() == 1
    }

    /// Whether both beliefs index the same atoms.
    pub fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.atoms, &other.atoms) || self.atoms[..] == other.atoms[..]
    }

    /// Kish effective sample size, 1 / Σ wᵢ².
    pub fn effective_sample_size(&self) -> f64 {
        let sq: f64 = self.weights.iter().map(|w| w.to_f64_lossy().powi(2)).sum();
        if sq > 0.0 {
            1.0 / sq
        } else {
            0.0
        }
    }

    /// Total mass on atoms satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&T) -> bool) -> F {
        self.support()
            .filter(|(_, t, _)| pred(t))
            .map(|(_, _, w)| w)
            .sum()
    }

    /// Index of the heaviest atom, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn summary(&self) -> BeliefSummary {
        BeliefSummary {
            max_weight: self.weights[self.argmax()].to_f64_lossy(),
            support: self.support_size(),
            ess: self.effective_sample_size(),
        }
    }

    /// Draws an atom index proportionally to weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, w) in self.weights.iter().enumerate() {
            let w = w.to_f64_lossy();
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }

    /// Systematic resampling to `count` equally weighted particles.
    pub fn resample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Self {
        let sampler = CumulativeSampler::new(self);
        let start: f64 = rng.gen::<f64>() / count as f64;
        let atoms: Vec<T> = (0..count)
            .map(|k| {
                let u = start + k as f64 / count as f64;
                self.atoms[sampler.locate(u)].clone()
            })
            .collect();
        Belief::particles(atoms).expect("count > 0")
    }
}

/// Compact description of a belief for episode logs.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BeliefSummary {
    pub max_weight: f64,
    pub support: usize,
    pub ess: f64,
}

/// O(log N) sampler over a frozen belief.
#[derive(Clone, Debug)]
pub struct CumulativeSampler {
    cumulative: Vec<f64>,
    index: Vec<u32>,
}

impl CumulativeSampler {
    pub fn new<T: Clone + PartialEq, F: Scalar>(b: &Belief<T, F>) -> Self {
        let mut cumulative = Vec::new();
        let mut index = Vec::new();
        let mut acc = 0.0;
        for (i, _, w) in b.support() {
            acc += w.to_f64_lossy();
            cumulative.push(acc);
            index.push(i as u32);
        }
        // Normalize away the rounding drift so u ∈ [0, 1) always lands.
        if let Some(total) = cumulative.last().copied() {
            for c in cumulative.iter_mut() {
                *c /= total;
            }
        }
        CumulativeSampler { cumulative, index }
    }

    pub fn locate(&self, u: f64) -> usize {
        let pos = self.cumulative.partition_point(|c| *c <= u);
        self.index[pos.min(self.index.len() - 1)] as usize
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.locate(rng.gen())
    }
}

/// Configuration for belief representation and tracking.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefConfig {
    /// Largest enumerated space kept as an exact belief.
    pub exact_limit: usize,
    /// Particle count for large spaces.
    pub particles: usize,
    /// Reinvigorate when ESS falls below this fraction of the count.
    pub resample_fraction: f64,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig {
            exact_limit: 4096,
            particles: 10_000,
            resample_fraction: 0.1,
        }
    }
}

/// Prior belief: exact when Θ is enumerated and small, particles otherwise.
pub fn initial_belief<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    cfg: &BeliefConfig,
    rng: &mut R,
) -> Result<Belief<M::Theta, M::Scalar>> {
    match model.hidden_space() {
        HiddenSpace::Enumerated(atoms) if atoms.len() <= cfg.exact_limit => {
            let weights = atoms.iter().map(|t| model.prior_weight(t)).collect();
            Belief::exact(atoms, weights)
        }
        _ => {
            let atoms = (0..cfg.particles)
                .map(|_| model.sample_prior(rng))
                .collect();
            Belief::particles(atoms)
        }
    }
}

/// Posterior b′(θ) ∝ T(θ, s, a, s′) · b(θ).
///
/// Particles are moved through φ individually; exact beliefs are pushed
/// forward onto the enumerated space.
pub fn bayes_update<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    s_next: &AugmentedState<M::X>,
) -> Result<Belief<M::Theta, M::Scalar>> {
    let posterior = posterior_weights(model, b, s, a, s_next)?;
    if model.is_static() {
        return Ok(Belief {
            kind: b.kind,
            atoms: b.atoms.clone(),
            weights: posterior,
        });
    }
    match b.kind {
        BeliefKind::Particle => {
            let atoms: Vec<M::Theta> = b.atoms.iter().map(|t| model.advance(t, &s.x, a)).collect();
            Ok(Belief {
                kind: BeliefKind::Particle,
                atoms: atoms.into(),
                weights: posterior,
            })
        }
        BeliefKind::Exact => {
            let index: FxHashMap<&M::Theta, usize> =
                b.atoms.iter().enumerate().map(|(i, t)| (t, i)).collect();
            let mut pushed = vec![M::Scalar::zero(); b.atoms.len()];
            for (i, w) in posterior.iter().enumerate() {
                if *w == M::Scalar::zero() {
                    continue;
                }
                let moved = model.advance(&b.atoms[i], &s.x, a);
                let j = *index.get(&moved).ok_or_else(|| {
                    PliteError::State(format!(
                        "φ maps {:?} outside the enumerated hidden space",
                        b.atoms[i]
                    ))
                })?;
                pushed[j] = pushed[j] + *w;
            }
            Ok(Belief {
                kind: BeliefKind::Exact,
                atoms: b.atoms.clone(),
                weights: pushed,
            })
        }
    }
}

/// Normalized posterior weights over the prior's atom identities (before φ).
pub fn posterior_weights<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    s_next: &AugmentedState<M::X>,
) -> Result<Vec<M::Scalar>> {
    let mut post = vec![M::Scalar::zero(); b.len()];
    let mut total = M::Scalar::zero();
    for (i, theta, w) in b.support() {
        let lik = transition_likelihood(model, theta, &s.x, a, s_next);
        let v = w * lik;
        post[i] = v;
        total = total + v;
    }
    if total <= M::Scalar::zero() {
        return Err(PliteError::Inconsistent {
            state: format!(
                "({}, {})",
                model.state_name(&s.x),
                model.observation_name(s.obs)
            ),
            action: model.action_name(a),
            next: format!(
                "({}, {})",
                model.state_name(&s_next.x),
                model.observation_name(s_next.obs)
            ),
        });
    }
    for v in post.iter_mut() {
        *v = *v / total;
    }
    Ok(post)
}

/// Bayes update with particle-depletion handling.
///
/// Particle beliefs whose effective size drops below the configured
/// fraction are rebuilt by the model's constraint-aware sampler when it has
/// one, or resampled otherwise. A particle belief that loses all support is
/// rebuilt from scratch by the same sampler before giving up.
pub fn track_update<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    s_next: &AugmentedState<M::X>,
    cfg: &BeliefConfig,
    rng: &mut R,
) -> Result<Belief<M::Theta, M::Scalar>> {
    match (bayes_update(model, b, s, a, s_next), b.kind) {
        (Ok(next), BeliefKind::Exact) => Ok(next),
        (Ok(next), BeliefKind::Particle) => {
            let count = cfg.particles.max(1);
            if next.effective_sample_size() < cfg.resample_fraction * count as f64 {
                Ok(model
                    .reinvigorate(&next, s_next, count, rng)
                    .unwrap_or_else(|| next.resample(count, rng)))
            } else {
                Ok(next)
            }
        }
        (Err(err @ PliteError::Inconsistent { .. }), BeliefKind::Particle) => model
            .reinvigorate(b, s_next, cfg.particles.max(1), rng)
            .ok_or(err),
        (Err(err), _) => Err(err),
    }
}

/// Σ_θ |b₁(θ) − b₂(θ)|, matching atoms by position.
pub fn l1_divergence<T: Clone + PartialEq, F: Scalar>(
    b1: &Belief<T, F>,
    b2: &Belief<T, F>,
) -> Result<F> {
    if !b1.same_space(b2) {
        return Err(PliteError::Argument(
            "beliefs are over different hidden spaces".into(),
        ));
    }
    Ok(b1
        .weights
        .iter()
        .zip(b2.weights.iter())
        .map(|(p, q)| (*p - *q).abs())
        .sum())
}

/// R(b, s, a) = Σᵢ R(θᵢ, x, a) b(θᵢ).
pub fn mean_reward<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
) -> M::Scalar {
    b.support()
        .map(|(_, theta, w)| model.reward(theta, &s.x, a) * w)
        .sum()
}

/// One possible next state with the per-atom likelihoods that produce it.
#[derive(Clone, Debug)]
pub struct OutcomeColumn<X, F> {
    pub next: AugmentedState<X>,
    /// P(s′ | b, s, a).
    pub mass: F,
    /// `(atom index, T(θ, s, a, s′))` for atoms that can produce s′.
    pub likelihoods: Vec<(u32, F)>,
}

/// Every next state reachable under some atom in the support of `b`.
pub fn outcome_table<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
) -> Vec<OutcomeColumn<M::X, M::Scalar>> {
    let mut columns: Vec<OutcomeColumn<M::X, M::Scalar>> = Vec::new();
    let mut position: FxHashMap<AugmentedState<M::X>, usize> = FxHashMap::default();
    for (i, theta, w) in b.support() {
        for (next, p) in augmented_transition(model, theta, &s.x, a) {
            let c = match position.get(&next) {
                Some(&c) => c,
                None => {
                    position.insert(next.clone(), columns.len());
                    columns.push(OutcomeColumn {
                        next,
                        mass: M::Scalar::zero(),
                        likelihoods: Vec::new(),
                    });
                    columns.len() - 1
                }
            };
            columns[c].mass = columns[c].mass + w * p;
            columns[c].likelihoods.push((i as u32, p));
        }
    }
    columns
}

/// P(s′ | b, s, a) = Σᵢ T(θᵢ, s, a, s′) b(θᵢ).
pub fn mean_transition<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
) -> Vec<(AugmentedState<M::X>, M::Scalar)> {
    outcome_table(model, b, s, a)
        .into_iter()
        .map(|c| (c.next, c.mass))
        .collect()
}

/// ‖b_{s′} − b‖₁ for one outcome column, matching atom identities.
fn column_divergence<X, F: Scalar>(weights: &[F], column: &OutcomeColumn<X, F>) -> F {
    if column.mass <= F::zero() {
        return F::zero();
    }
    let mut producing = F::zero();
    let mut moved = F::zero();
    for &(i, lik) in &column.likelihoods {
        let w = weights[i as usize];
        producing = producing + w;
        moved = moved + (w * lik / column.mass - w).abs();
    }
    // Atoms that cannot produce s′ drop to zero and contribute their full weight.
    moved + (F::one() - producing).max_of(F::zero())
}

/// RB(b, s, a) = β Σ_{s′} P(s′ | b, s, a) ‖b_{s′} − b‖₁, by enumeration.
pub fn reward_bonus<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    beta: M::Scalar,
) -> M::Scalar {
    if beta == M::Scalar::zero() {
        return M::Scalar::zero();
    }
    let expected: M::Scalar = outcome_table(model, b, s, a)
        .iter()
        .map(|c| c.mass * column_divergence(&b.weights, c))
        .sum();
    beta * expected
}

/// R̃(b, s, a) = R(b, s, a) + RB(b, s, a).
pub fn internal_reward<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    beta: M::Scalar,
) -> M::Scalar {
    mean_reward(model, b, s, a) + reward_bonus(model, b, s, a, beta)
}

/// Exact-versus-sampled switch for the bonus.
#[derive(Clone, Debug, PartialEq)]
pub struct BonusConfig {
    /// Enumerate when (support atoms) × (outcomes per atom) is at most this.
    pub exact_cap: usize,
    /// Paired (θ, s′) samples otherwise.
    pub samples: usize,
}

impl Default for BonusConfig {
    fn default() -> Self {
        BonusConfig {
            exact_cap: 1 << 16,
            samples: 256,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BonusEstimate<F> {
    pub value: F,
    /// Zero for enumerated values.
    pub stderr: f64,
    pub exact: bool,
}

/// The bonus, enumerated when small enough and Monte Carlo estimated from
/// paired draws θ ~ b, s′ ~ T(θ, s, a, ·) otherwise.
pub fn estimate_reward_bonus<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    a: Action,
    beta: M::Scalar,
    cfg: &BonusConfig,
    rng: &mut R,
) -> BonusEstimate<M::Scalar> {
    let support = b.support_size();
    let probe = b
        .support()
        .next()
        .map(|(_, theta, _)| augmented_transition(model, theta, &s.x, a).len())
        .unwrap_or(1);
    if support.saturating_mul(probe) <= cfg.exact_cap || cfg.samples == 0 {
        return BonusEstimate {
            value: reward_bonus(model, b, s, a, beta),
            stderr: 0.0,
            exact: true,
        };
    }
    let sampler = CumulativeSampler::new(b);
    let mut cache: FxHashMap<AugmentedState<M::X>, f64> = FxHashMap::default();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..cfg.samples {
        let i = sampler.sample(rng);
        let dist = augmented_transition(model, &b.atoms[i], &s.x, a);
        let next = sample_dist(&dist, rng).clone();
        let d = *cache.entry(next.clone()).or_insert_with(|| {
            let mut column = OutcomeColumn {
                next: next.clone(),
                mass: M::Scalar::zero(),
                likelihoods: Vec::new(),
            };
            for (j, theta, w) in b.support() {
                let lik = transition_likelihood(model, theta, &s.x, a, &next);
                if lik > M::Scalar::zero() {
                    column.mass = column.mass + w * lik;
                    column.likelihoods.push((j as u32, lik));
                }
            }
            column_divergence(&b.weights, &column).to_f64_lossy()
        });
        sum += d;
        sum_sq += d * d;
    }
    let m = cfg.samples as f64;
    let mean = sum / m;
    let var = if cfg.samples > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    let beta_f = beta.to_f64_lossy();
    BonusEstimate {
        value: M::Scalar::from_f64_lossy(beta_f * mean),
        stderr: beta_f * (var / m).sqrt(),
        exact: false,
    }
}

/// The mean MDP under a frozen belief with the bonus added to its reward.
///
/// The belief never changes inside this model: every query averages over
/// the same weights.
pub struct InternalRewardModel<'m, M: PomdpLite> {
    pub base: &'m M,
    pub belief: Belief<M::Theta, M::Scalar>,
    pub beta: M::Scalar,
}

impl<'m, M: PomdpLite> InternalRewardModel<'m, M> {
    pub fn new(base: &'m M, belief: Belief<M::Theta, M::Scalar>, beta: M::Scalar) -> Result<Self> {
        if beta < M::Scalar::zero() {
            return Err(PliteError::Argument(format!(
                "bonus scale must be nonnegative, got {beta}"
            )));
        }
        Ok(InternalRewardModel { base, belief, beta })
    }

    pub fn reward(&self, s: &AugmentedState<M::X>, a: Action) -> M::Scalar {
        internal_reward(self.base, &self.belief, s, a, self.beta)
    }

    pub fn transition(
        &self,
        s: &AugmentedState<M::X>,
        a: Action,
    ) -> Vec<(AugmentedState<M::X>, M::Scalar)> {
        mean_transition(self.base, &self.belief, s, a)
    }

    /// Reward and transition from one pass over the outcome table.
    pub fn backup_terms(
        &self,
        s: &AugmentedState<M::X>,
        a: Action,
    ) -> (M::Scalar, Vec<(AugmentedState<M::X>, M::Scalar)>) {
        let table = outcome_table(self.base, &self.belief, s, a);
        let bonus: M::Scalar = if self.beta == M::Scalar::zero() {
            M::Scalar::zero()
        } else {
            self.beta
                * table
                    .iter()
                    .map(|c| c.mass * column_divergence(&self.belief.weights, c))
                    .sum::<M::Scalar>()
        };
        let reward = mean_reward(self.base, &self.belief, s, a) + bonus;
        (
            reward,
            table.into_iter().map(|c| (c.next, c.mass)).collect(),
        )
    }
}
