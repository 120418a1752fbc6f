//! A family of deterministic chain MDPs with a uniform discrete prior.
//!
//! States are `0..length`; the last one is the goal and absorbs. Under
//! variant θ each (state, action) pair has one fixed successor: the
//! variant's "correct" action at a state advances by one, the other action
//! falls back to the start.

use std::marker::PhantomData;
use std::sync::Arc;

use rand::Rng;
use smallvec::smallvec;

use crate::error::{PliteError, Result};
use crate::model::{Action, Dist, HiddenSpace, Observation, PomdpLite};
use crate::scalar::Scalar;

pub const CHAIN_ACTIONS: usize = 2;

#[derive(Clone, Debug)]
pub struct DeterministicChain<F> {
    length: usize,
    // successor[v][s][a]
    successor: Vec<Vec<[usize; CHAIN_ACTIONS]>>,
    variants: Arc<[usize]>,
    gamma: F,
    _scalar: PhantomData<F>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<F: Scalar> DeterministicChain<F> {
    pub fn new(variants: usize, length: usize) -> Result<Self> {
        if variants == 0 {
            return Err(PliteError::Argument(
                "chain needs at least one variant".into(),
            ));
        }
        if length < 2 {
            return Err(PliteError::Argument(format!(
                "chain length must be at least 2, got {length}"
            )));
        }
        let successor = (0..variants)
            .map(|v| {
                (0..length)
                    .map(|s| {
                        let correct = (splitmix(((v as u64) << 32) | s as u64) & 1) as usize;
                        let mut row = [0usize; CHAIN_ACTIONS];
                        row[correct] = (s + 1).min(length - 1);
                        row[1 - correct] = 0;
                        row
                    })
                    .collect()
            })
            .collect();
        Ok(DeterministicChain {
            length,
            successor,
            variants: (0..variants).collect::<Vec<_>>().into(),
            gamma: F::ratio(95, 100),
            _scalar: PhantomData,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn goal(&self) -> usize {
        self.length - 1
    }

    pub fn successor(&self, variant: usize, s: usize, a: Action) -> usize {
        self.successor[variant][s][a.index()]
    }
}

impl<F: Scalar> PomdpLite for DeterministicChain<F> {
    type Scalar = F;
    type X = usize;
    type Theta = usize;

    fn hidden_space(&self) -> HiddenSpace<usize> {
        HiddenSpace::Enumerated(self.variants.clone())
    }

    fn prior_weight(&self, _theta: &usize) -> F {
        F::one() / F::from_count(self.variants.len())
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.variants.len())
    }

    fn num_actions(&self) -> usize {
        CHAIN_ACTIONS
    }

    fn legal_actions_into(&self, x: &usize, out: &mut Vec<Action>) {
        out.clear();
        if *x != self.goal() {
            out.extend((0..CHAIN_ACTIONS as u16).map(Action));
        }
    }

    fn transition(&self, theta: &usize, x: &usize, a: Action) -> Dist<usize, F> {
        if *x == self.goal() {
            return smallvec![(*x, F::one())];
        }
        smallvec![(self.successor(*theta, *x, a), F::one())]
    }

    fn observation(&self, _theta: &usize, _x_next: &usize, _a: Action) -> Dist<Observation, F> {
        smallvec![(Observation::Null, F::one())]
    }

    fn reward(&self, theta: &usize, x: &usize, a: Action) -> F {
        if *x == self.goal() {
            F::zero()
        } else if self.successor(*theta, *x, a) == self.goal() {
            F::ratio(10, 1)
        } else {
            F::ratio(-1, 1)
        }
    }

    fn gamma(&self) -> F {
        self.gamma
    }

    fn initial_x(&self) -> usize {
        0
    }

    fn is_terminal(&self, x: &usize) -> bool {
        *x == self.goal()
    }

    fn num_observations(&self) -> usize {
        0
    }

    fn enumerate_states(&self) -> Option<Vec<usize>> {
        Some((0..self.length).collect())
    }

    fn return_range_hint(&self) -> f64 {
        10.0 + self.length as f64
    }

    fn action_name(&self, a: Action) -> String {
        match a.0 {
            0 => "a".into(),
            1 => "b".into(),
            k => format!("a{k}"),
        }
    }

    fn theta_name(&self, theta: &usize) -> String {
        format!("v{theta}")
    }

    fn state_name(&self, x: &usize) -> String {
        format!("s{x}")
    }
}

/// Uniform prior over `variants` deterministic chains of `length` states.
pub fn make_deterministic_chain<F: Scalar>(
    variants: usize,
    length: usize,
) -> Result<DeterministicChain<F>> {
    DeterministicChain::new(variants, length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_outcome_is_deterministic() {
        let chain = DeterministicChain::<f64>::new(4, 6).unwrap();
        for v in 0..4 {
            for s in 0..6 {
                for a in chain.legal_actions(&s) {
                    let row = chain.transition(&v, &s, a);
                    assert_eq!(row.len(), 1);
                    assert_eq!(row[0].1, 1.0);
                }
            }
        }
    }

    #[test]
    fn exactly_one_action_advances() {
        let chain = DeterministicChain::<f64>::new(3, 5).unwrap();
        for v in 0..3 {
            for s in 0..4 {
                let next: Vec<usize> = (0..2).map(|a| chain.successor(v, s, Action(a))).collect();
                assert!(next.contains(&(s + 1)));
                assert!(next.contains(&0));
            }
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(DeterministicChain::<f64>::new(0, 4).is_err());
        assert!(DeterministicChain::<f64>::new(2, 1).is_err());
    }
}
