//! Value iteration on enumerated augmented state spaces.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::belief::{Belief, InternalRewardModel};
use crate::error::{PliteError, Result};
use crate::model::{legal_actions, Action, AugmentedState, IndexedMdpView, PomdpLite};
use crate::planners::PlannerConfig;
use crate::scalar::Scalar;

/// Q̃ and Ṽ over every state reachable from the roots.
#[derive(Clone, Debug)]
pub struct ValueTable<X, F> {
    states: Vec<AugmentedState<X>>,
    index: FxHashMap<AugmentedState<X>, usize>,
    q: Vec<Vec<(Action, F)>>,
    v: Vec<F>,
    pub iterations: usize,
    /// Sup-norm change of the final sweep.
    pub residual: f64,
}

impl<X: Clone + Eq + std::hash::Hash, F: Scalar> ValueTable<X, F> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[AugmentedState<X>] {
        &self.states
    }

    pub fn contains(&self, s: &AugmentedState<X>) -> bool {
        self.index.contains_key(s)
    }

    pub fn v(&self, s: &AugmentedState<X>) -> Option<F> {
        self.index.get(s).map(|&i| self.v[i])
    }

    pub fn q(&self, s: &AugmentedState<X>, a: Action) -> Option<F> {
        self.q_row(s)?
            .iter()
            .find(|(b, _)| *b == a)
            .map(|(_, q)| *q)
    }

    /// Q values of the legal actions at `s`, in action order.
    pub fn q_row(&self, s: &AugmentedState<X>) -> Option<&[(Action, F)]> {
        self.index.get(s).map(|&i| self.q[i].as_slice())
    }

    /// Highest-Q action, lowest index on ties. `None` at terminal states.
    pub fn greedy(&self, s: &AugmentedState<X>) -> Option<Action> {
        argmax(self.q_row(s)?)
    }
}

pub(crate) fn argmax<F: Scalar>(row: &[(Action, F)]) -> Option<Action> {
    let mut best: Option<(Action, F)> = None;
    for &(a, q) in row {
        match best {
            Some((_, b)) if q <= b => {}
            _ => best = Some((a, q)),
        }
    }
    best.map(|(a, _)| a)
}

struct Edge<F> {
    action: Action,
    reward: F,
    next: Vec<(u32, F)>,
}

type Expansion<X, F> = Vec<(Action, F, Vec<(AugmentedState<X>, F)>)>;

/// Breadth-first enumeration of reachable states followed by synchronous
/// Bellman sweeps.
fn solve_graph<X, F, E>(
    roots: &[AugmentedState<X>],
    gamma: F,
    tolerance: f64,
    max_iters: usize,
    state_cap: usize,
    mut expand: E,
) -> Result<ValueTable<X, F>>
where
    X: Clone + Eq + std::hash::Hash,
    F: Scalar,
    E: FnMut(&AugmentedState<X>) -> Expansion<X, F>,
{
    let mut states: Vec<AugmentedState<X>> = Vec::new();
    let mut index: FxHashMap<AugmentedState<X>, usize> = FxHashMap::default();
    let mut edges: Vec<Vec<Edge<F>>> = Vec::new();
    let mut queue = VecDeque::new();
    for root in roots {
        if !index.contains_key(root) {
            index.insert(root.clone(), states.len());
            states.push(root.clone());
            queue.push_back(states.len() - 1);
        }
    }
    edges.resize_with(states.len(), Vec::new);
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        let mut out = Vec::new();
        for (action, reward, next) in expand(&s) {
            let mut targets = Vec::with_capacity(next.len());
            for (s_next, p) in next {
                let j = match index.get(&s_next) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= state_cap {
                            return Err(PliteError::Budget {
                                nodes: states.len() + 1,
                                cap: state_cap,
                            });
                        }
                        index.insert(s_next.clone(), states.len());
                        states.push(s_next);
                        edges.push(Vec::new());
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    }
                };
                targets.push((j as u32, p));
            }
            out.push(Edge {
                action,
                reward,
                next: targets,
            });
        }
        edges[i] = out;
    }

    let g = gamma.to_f64_lossy();
    // Stop once the remaining value error is below the tolerance.
    let threshold = if g < 1.0 {
        tolerance * (1.0 - g) / g
    } else {
        tolerance
    };
    let mut v = vec![F::zero(); states.len()];
    let mut q: Vec<Vec<(Action, F)>> = edges
        .iter()
        .map(|row| row.iter().map(|e| (e.action, F::zero())).collect())
        .collect();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut next_v = vec![F::zero(); states.len()];
        residual = 0.0;
        for (i, row) in edges.iter().enumerate() {
            let mut best: Option<F> = None;
            for (k, e) in row.iter().enumerate() {
                let future: F = e.next.iter().map(|&(j, p)| p * v[j as usize]).sum();
                let value = e.reward + gamma * future;
                q[i][k].1 = value;
                best = Some(match best {
                    Some(b) if b >= value => b,
                    _ => value,
                });
            }
            next_v[i] = best.unwrap_or_else(F::zero);
            residual = residual.max((next_v[i] - v[i]).abs().to_f64_lossy());
        }
        v = next_v;
        if residual <= threshold {
            return Ok(ValueTable {
                states,
                index,
                q,
                v,
                iterations,
                residual,
            });
        }
    }
    Err(PliteError::NonConvergence {
        iterations,
        residual,
    })
}

/// Solves the mean MDP with the bonus added to its reward, under the frozen
/// belief `b`, over every state reachable from `root`.
pub fn solve_internal_vi<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    root: &AugmentedState<M::X>,
    cfg: &PlannerConfig,
) -> Result<ValueTable<M::X, M::Scalar>> {
    cfg.validate()?;
    let internal = InternalRewardModel::new(model, b.clone(), M::Scalar::from_f64_lossy(cfg.beta))?;
    solve_graph(
        std::slice::from_ref(root),
        model.gamma(),
        cfg.vi_tolerance,
        cfg.vi_max_iters,
        cfg.vi_state_cap,
        |s| {
            legal_actions(model, s)
                .into_iter()
                .map(|a| {
                    let (r, next) = internal.backup_terms(s, a);
                    (a, r, next)
                })
                .collect()
        },
    )
}

/// Plain value iteration on one indexed MDP from the given roots.
pub fn solve_mdp<M: PomdpLite>(
    view: &IndexedMdpView<'_, M>,
    roots: &[AugmentedState<M::X>],
    tolerance: f64,
    max_iters: usize,
    state_cap: usize,
) -> Result<ValueTable<M::X, M::Scalar>> {
    let model = view.model();
    if !model.is_static() {
        return Err(PliteError::Unsupported(
            "per-θ value iteration needs a static hidden value".into(),
        ));
    }
    solve_graph(roots, view.gamma(), tolerance, max_iters, state_cap, |s| {
        legal_actions(model, s)
            .into_iter()
            .map(|a| {
                (
                    a,
                    view.reward(s, a),
                    view.transition(s, a).into_iter().collect(),
                )
            })
            .collect()
    })
}

/// States reachable from `roots` in one indexed MDP.
pub fn reachable_states<M: PomdpLite>(
    view: &IndexedMdpView<'_, M>,
    roots: &[AugmentedState<M::X>],
    state_cap: usize,
) -> Result<Vec<AugmentedState<M::X>>> {
    let model = view.model();
    let mut seen: FxHashMap<AugmentedState<M::X>, ()> = FxHashMap::default();
    let mut order = Vec::new();
    let mut queue: VecDeque<AugmentedState<M::X>> = VecDeque::new();
    for r in roots {
        if seen.insert(r.clone(), ()).is_none() {
            order.push(r.clone());
            queue.push_back(r.clone());
        }
    }
    while let Some(s) = queue.pop_front() {
        for a in legal_actions(model, &s) {
            for (n, _) in view.transition(&s, a) {
                if seen.insert(n.clone(), ()).is_none() {
                    if order.len() >= state_cap {
                        return Err(PliteError::Budget {
                            nodes: order.len() + 1,
                            cap: state_cap,
                        });
                    }
                    order.push(n.clone());
                    queue.push_back(n);
                }
            }
        }
    }
    Ok(order)
}
