//! UCT on the internal-reward MDP.
//!
//! Every simulated step draws θ from the frozen root belief and samples the
//! successor from that θ's dynamics, which realizes the mean transition.
//! Rewards are the exact mean reward plus bonus at the root belief, cached
//! per (x, a) class for the duration of one search.

use num_traits::Zero;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use rustc_hash::FxHashMap;

use crate::belief::{estimate_reward_bonus, mean_reward, Belief, BonusConfig};
use crate::error::{PliteError, Result};
use crate::model::{sample_dist, Action, AugmentedState, PomdpLite};
use crate::planners::{Budget, PlannerConfig, RootSelection};
use crate::scalar::Scalar;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ActionStats {
    pub action: Action,
    pub visits: u32,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UctResult {
    pub action: Action,
    pub simulations: usize,
    pub nodes: usize,
    pub root: Vec<ActionStats>,
}

struct Node<X> {
    state: AugmentedState<X>,
    visits: u32,
    actions: Vec<Action>,
    // (visits, total return) per entry of `actions`.
    stats: Vec<(u32, f64)>,
    // (action slot, child node).
    children: Vec<(u16, u32)>,
}

/// R̃(b, x, a) memoized on the model's outcome key, or on (x, a).
struct RewardCache<'a, M: PomdpLite> {
    model: &'a M,
    belief: &'a Belief<M::Theta, M::Scalar>,
    beta: M::Scalar,
    bonus: &'a BonusConfig,
    by_key: FxHashMap<u64, f64>,
    by_pair: FxHashMap<(M::X, Action), f64>,
    rng: ChaCha8Rng,
}

impl<'a, M: PomdpLite> RewardCache<'a, M> {
    fn compute(&mut self, x: &M::X, a: Action) -> f64 {
        let s = AugmentedState::start(x.clone());
        let r = mean_reward(self.model, self.belief, &s, a).to_f64_lossy();
        if self.beta == M::Scalar::zero() {
            return r;
        }
        let rb = estimate_reward_bonus(
            self.model,
            self.belief,
            &s,
            a,
            self.beta,
            self.bonus,
            &mut self.rng,
        );
        r + rb.value.to_f64_lossy()
    }

    fn get(&mut self, x: &M::X, a: Action) -> f64 {
        match self.model.outcome_key(x, a) {
            Some(key) => {
                if let Some(v) = self.by_key.get(&key) {
                    return *v;
                }
                let v = self.compute(x, a);
                self.by_key.insert(key, v);
                v
            }
            None => {
                if let Some(v) = self.by_pair.get(&(x.clone(), a)) {
                    return *v;
                }
                let v = self.compute(x, a);
                self.by_pair.insert((x.clone(), a), v);
                v
            }
        }
    }
}

/// Constant-time draws of atom indices from a fixed belief.
struct AtomSampler {
    alias: WeightedAliasIndex<f64>,
    index: Vec<u32>,
}

impl AtomSampler {
    fn new<T: Clone + PartialEq, F: Scalar>(b: &Belief<T, F>) -> Result<Self> {
        let (index, weights): (Vec<u32>, Vec<f64>) = b
            .support()
            .map(|(i, _, w)| (i as u32, w.to_f64_lossy()))
            .unzip();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| PliteError::Argument(format!("belief cannot be sampled: {e}")))?;
        Ok(AtomSampler { alias, index })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index[self.alias.sample(rng)] as usize
    }
}

/// Simulation depth: the configured cap, shortened to where γᵈ < 0.01 for
/// discounted models and stretched to one step per action otherwise.
pub fn depth_limit<M: PomdpLite>(model: &M, cfg: &PlannerConfig) -> usize {
    let g = model.gamma().to_f64_lossy();
    if g < 1.0 {
        let h = (0.01f64.ln() / g.ln()).ceil() as usize;
        cfg.rollout_depth_cap.min(h).max(1)
    } else {
        cfg.rollout_depth_cap.max(model.num_actions())
    }
}

struct Search<'a, M: PomdpLite> {
    model: &'a M,
    belief: &'a Belief<M::Theta, M::Scalar>,
    sampler: AtomSampler,
    rewards: RewardCache<'a, M>,
    nodes: Vec<Node<M::X>>,
    gamma: f64,
    c: f64,
    limit: usize,
    persist: bool,
    rng: ChaCha8Rng,
}

impl<'a, M: PomdpLite> Search<'a, M> {
    fn new_node(&mut self, state: AugmentedState<M::X>) -> u32 {
        let mut actions = Vec::new();
        if !self.model.is_terminal(&state.x) {
            self.model.legal_actions_into(&state.x, &mut actions);
        }
        let stats = vec![(0, 0.0); actions.len()];
        self.nodes.push(Node {
            state,
            visits: 0,
            actions,
            stats,
            children: Vec::new(),
        });
        (self.nodes.len() - 1) as u32
    }

    fn select(&self, node: &Node<M::X>) -> usize {
        if let Some(k) = node.stats.iter().position(|(n, _)| *n == 0) {
            return k;
        }
        let log_n = (node.visits.max(1) as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, &(n, total)) in node.stats.iter().enumerate() {
            let n = n as f64;
            let score = total / n + self.c * (log_n / n).sqrt();
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        best
    }

    /// Successor of (x, a) under `theta`, with θ advanced when it persists.
    fn step(&mut self, theta: Option<&mut M::Theta>, x: &M::X, a: Action) -> AugmentedState<M::X> {
        let model = self.model;
        match theta {
            Some(theta) => {
                let moved = model.advance(theta, x, a);
                let xs = model.transition(theta, x, a);
                let x_next = sample_dist(&xs, &mut self.rng).clone();
                let os = model.observation(&moved, &x_next, a);
                let obs = *sample_dist(&os, &mut self.rng);
                *theta = moved;
                AugmentedState::new(x_next, obs)
            }
            None => {
                let i = self.sampler.sample(&mut self.rng);
                let drawn = &self.belief.atoms()[i];
                let xs = model.transition(drawn, x, a);
                let x_next = sample_dist(&xs, &mut self.rng).clone();
                let obs = if model.is_static() {
                    let os = model.observation(drawn, &x_next, a);
                    *sample_dist(&os, &mut self.rng)
                } else {
                    let moved = model.advance(drawn, x, a);
                    let os = model.observation(&moved, &x_next, a);
                    *sample_dist(&os, &mut self.rng)
                };
                AugmentedState::new(x_next, obs)
            }
        }
    }

    fn rollout(&mut self, mut x: M::X, depth: usize, mut theta: Option<M::Theta>) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in depth..self.limit {
            if self.model.is_terminal(&x) {
                break;
            }
            let Some(a) = self.model.random_legal_action(&x, &mut self.rng) else {
                break;
            };
            total += discount * self.rewards.get(&x, a);
            discount *= self.gamma;
            x = self.step(theta.as_mut(), &x, a).x;
        }
        total
    }

    fn simulate(&mut self, id: u32, depth: usize, mut theta: Option<M::Theta>) -> f64 {
        let idx = id as usize;
        if depth >= self.limit || self.nodes[idx].actions.is_empty() {
            self.nodes[idx].visits += 1;
            return 0.0;
        }
        let k = self.select(&self.nodes[idx]);
        let a = self.nodes[idx].actions[k];
        let x = self.nodes[idx].state.x.clone();
        let r = self.rewards.get(&x, a);
        let next = self.step(theta.as_mut(), &x, a);
        let child = self.nodes[idx]
            .children
            .iter()
            .find(|&&(slot, c)| slot as usize == k && self.nodes[c as usize].state == next)
            .map(|&(_, c)| c);
        let future = match child {
            Some(c) => self.simulate(c, depth + 1, theta),
            None => {
                let c = self.new_node(next.clone());
                self.nodes[idx].children.push((k as u16, c));
                self.nodes[c as usize].visits += 1;
                self.rollout(next.x, depth + 1, theta)
            }
        };
        let value = r + self.gamma * future;
        let node = &mut self.nodes[idx];
        node.visits += 1;
        node.stats[k].0 += 1;
        node.stats[k].1 += value;
        value
    }
}

/// Runs the search and reports root statistics.
pub fn uct_search<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<UctResult> {
    cfg.validate()?;
    if model.is_terminal(&s.x) {
        return Err(PliteError::State(format!(
            "no legal actions at terminal state {}",
            model.state_name(&s.x)
        )));
    }
    let mut search = Search {
        model,
        belief: b,
        sampler: AtomSampler::new(b)?,
        rewards: RewardCache {
            model,
            belief: b,
            beta: M::Scalar::from_f64_lossy(cfg.beta),
            bonus: &cfg.bonus,
            by_key: FxHashMap::default(),
            by_pair: FxHashMap::default(),
            rng: ChaCha8Rng::seed_from_u64(rng.gen()),
        },
        nodes: Vec::new(),
        gamma: model.gamma().to_f64_lossy(),
        c: cfg
            .uct_exploration_c
            .unwrap_or_else(|| model.return_range_hint()),
        limit: depth_limit(model, cfg),
        persist: cfg.persist_theta,
        rng: ChaCha8Rng::seed_from_u64(rng.gen()),
    };
    let root = search.new_node(s.clone());
    if search.nodes[0].actions.is_empty() {
        return Err(PliteError::State(format!(
            "no legal actions at {}",
            model.state_name(&s.x)
        )));
    }
    let started = Instant::now();
    let mut simulations = 0usize;
    loop {
        let done = match cfg.budget {
            Budget::Simulations(n) => simulations >= n,
            Budget::TimeMs(ms) => {
                simulations > 0
                    && simulations % 16 == 0
                    && started.elapsed().as_millis() as u64 >= ms
            }
        };
        if done {
            break;
        }
        let theta = if search.persist {
            let i = search.sampler.sample(&mut search.rng);
            Some(b.atoms()[i].clone())
        } else {
            None
        };
        search.simulate(root, 0, theta);
        simulations += 1;
    }
    let node = &search.nodes[0];
    let root_stats: Vec<ActionStats> = node
        .actions
        .iter()
        .zip(node.stats.iter())
        .map(|(&action, &(visits, total))| ActionStats {
            action,
            visits,
            mean: if visits > 0 {
                total / visits as f64
            } else {
                f64::NAN
            },
        })
        .collect();
    let better = |st: &ActionStats, b: &ActionStats| match cfg.root_selection {
        RootSelection::MeanValue => st.mean > b.mean,
        RootSelection::Visits => (st.visits, st.mean) > (b.visits, b.mean),
    };
    let mut best: Option<&ActionStats> = None;
    for st in root_stats.iter().filter(|st| st.visits > 0) {
        match best {
            Some(b) if !better(st, b) => {}
            _ => best = Some(st),
        }
    }
    let action = best.map(|st| st.action).unwrap_or(node.actions[0]);
    Ok(UctResult {
        action,
        simulations,
        nodes: search.nodes.len(),
        root: root_stats,
    })
}

/// The action UCT recommends at (b, s).
pub fn uct_plan<M: PomdpLite, R: Rng + ?Sized>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<Action> {
    uct_search(model, b, s, cfg, rng).map(|r| r.action)
}
