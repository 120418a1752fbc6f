//! Exact finite-horizon expectimax over the belief tree.

use crate::belief::{bayes_update, mean_reward, outcome_table, Belief};
use crate::error::{PliteError, Result};
use crate::model::{legal_actions, Action, AugmentedState, PomdpLite};
use num_traits::Zero;

pub const DEFAULT_NODE_CAP: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<F> {
    pub value: F,
    /// `None` when the root is terminal or the horizon is 0.
    pub action: Option<Action>,
    pub nodes: usize,
}

/// Bayes-optimal value of `horizon` more steps from (b, s), updating the
/// belief at every branch. Ties go to the lowest action index.
pub fn bayes_optimal_oracle<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    horizon: usize,
    node_cap: usize,
) -> Result<OracleResult<M::Scalar>> {
    let mut nodes = 0;
    let (value, action) = expand(model, b, s, horizon, node_cap, &mut nodes)?;
    Ok(OracleResult {
        value,
        action,
        nodes,
    })
}

fn expand<M: PomdpLite>(
    model: &M,
    b: &Belief<M::Theta, M::Scalar>,
    s: &AugmentedState<M::X>,
    horizon: usize,
    cap: usize,
    nodes: &mut usize,
) -> Result<(M::Scalar, Option<Action>)> {
    *nodes += 1;
    if *nodes > cap {
        return Err(PliteError::Budget { nodes: *nodes, cap });
    }
    if horizon == 0 || model.is_terminal(&s.x) {
        return Ok((M::Scalar::zero(), None));
    }
    let gamma = model.gamma();
    let mut best: Option<(M::Scalar, Action)> = None;
    for a in legal_actions(model, s) {
        let mut value = mean_reward(model, b, s, a);
        for column in outcome_table(model, b, s, a) {
            if column.mass <= M::Scalar::zero() {
                continue;
            }
            let posterior = bayes_update(model, b, s, a, &column.next)?;
            let (future, _) = expand(model, &posterior, &column.next, horizon - 1, cap, nodes)?;
            value = value + gamma * column.mass * future;
        }
        match best {
            Some((v, _)) if value <= v => {}
            _ => best = Some((value, a)),
        }
    }
    Ok(match best {
        Some((v, a)) => (v, Some(a)),
        None => (M::Scalar::zero(), None),
    })
}
