//! One-shot Tiger: the game ends as soon as a door is opened.

use std::marker::PhantomData;
use std::sync::Arc;

use rand::Rng;
use smallvec::smallvec;

use crate::model::{Action, Dist, HiddenSpace, Observation, PomdpLite};
use crate::scalar::Scalar;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TigerSide {
    Left,
    Right,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TigerState {
    Playing,
    End,
}

pub const OPEN_LEFT: Action = Action(0);
pub const OPEN_RIGHT: Action = Action(1);
pub const LISTEN: Action = Action(2);

pub const HEAR_LEFT: Observation = Observation::Obs(0);
pub const HEAR_RIGHT: Observation = Observation::Obs(1);

#[derive(Clone, Debug)]
pub struct Tiger<F> {
    gamma: F,
    accuracy: F,
    miss: F,
    listen_cost: F,
    treasure: F,
    penalty: F,
    sides: Arc<[TigerSide]>,
    _scalar: PhantomData<F>,
}

impl<F: Scalar> Tiger<F> {
    /// Listening is correct with probability 0.85 and costs 1; the right
    /// door pays 10 and the tiger's door costs 100.
    pub fn new(gamma: F) -> Self {
        Tiger {
            gamma,
            accuracy: F::ratio(17, 20),
            miss: F::ratio(3, 20),
            listen_cost: F::ratio(-1, 1),
            treasure: F::ratio(10, 1),
            penalty: F::ratio(-100, 1),
            sides: Arc::from(vec![TigerSide::Left, TigerSide::Right]),
            _scalar: PhantomData,
        }
    }

    pub fn accuracy(&self) -> F {
        self.accuracy
    }
}

impl<F: Scalar> PomdpLite for Tiger<F> {
    type Scalar = F;
    type X = TigerState;
    type Theta = TigerSide;

    fn hidden_space(&self) -> HiddenSpace<TigerSide> {
        HiddenSpace::Enumerated(self.sides.clone())
    }

    fn prior_weight(&self, _theta: &TigerSide) -> F {
        F::ratio(1, 2)
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> TigerSide {
        if rng.gen_bool(0.5) {
            TigerSide::Left
        } else {
            TigerSide::Right
        }
    }

    fn num_actions(&self) -> usize {
        3
    }

    fn legal_actions_into(&self, x: &TigerState, out: &mut Vec<Action>) {
        out.clear();
        if *x == TigerState::Playing {
            out.extend([OPEN_LEFT, OPEN_RIGHT, LISTEN]);
        }
    }

    fn transition(&self, _theta: &TigerSide, x: &TigerState, a: Action) -> Dist<TigerState, F> {
        match (x, a) {
            (TigerState::End, _) => smallvec![(TigerState::End, F::one())],
            (TigerState::Playing, LISTEN) => smallvec![(TigerState::Playing, F::one())],
            (TigerState::Playing, _) => smallvec![(TigerState::End, F::one())],
        }
    }

    fn observation(
        &self,
        theta: &TigerSide,
        _x_next: &TigerState,
        a: Action,
    ) -> Dist<Observation, F> {
        if a != LISTEN {
            return smallvec![(Observation::Null, F::one())];
        }
        let miss = self.miss;
        match theta {
            TigerSide::Left => smallvec![(HEAR_LEFT, self.accuracy), (HEAR_RIGHT, miss)],
            TigerSide::Right => smallvec![(HEAR_LEFT, miss), (HEAR_RIGHT, self.accuracy)],
        }
    }

    fn reward(&self, theta: &TigerSide, x: &TigerState, a: Action) -> F {
        if *x == TigerState::End {
            return F::zero();
        }
        match (theta, a) {
            (_, LISTEN) => self.listen_cost,
            (TigerSide::Left, OPEN_LEFT) | (TigerSide::Right, OPEN_RIGHT) => self.penalty,
            _ => self.treasure,
        }
    }

    fn gamma(&self) -> F {
        self.gamma
    }

    fn initial_x(&self) -> TigerState {
        TigerState::Playing
    }

    fn is_terminal(&self, x: &TigerState) -> bool {
        *x == TigerState::End
    }

    fn outcome_key(&self, x: &TigerState, a: Action) -> Option<u64> {
        Some(((*x as u64) << 8) | a.0 as u64)
    }

    fn num_observations(&self) -> usize {
        2
    }

    fn enumerate_states(&self) -> Option<Vec<TigerState>> {
        Some(vec![TigerState::Playing, TigerState::End])
    }

    fn return_range_hint(&self) -> f64 {
        110.0
    }

    fn action_name(&self, a: Action) -> String {
        match a {
            OPEN_LEFT => "OL".into(),
            OPEN_RIGHT => "OR".into(),
            LISTEN => "LS".into(),
            other => format!("a{}", other.0),
        }
    }

    fn observation_name(&self, o: Observation) -> String {
        match o {
            Observation::Null => "null".into(),
            HEAR_LEFT => "TL".into(),
            HEAR_RIGHT => "TR".into(),
            Observation::Obs(k) => format!("o{k}"),
        }
    }

    fn theta_name(&self, theta: &TigerSide) -> String {
        match theta {
            TigerSide::Left => "L".into(),
            TigerSide::Right => "R".into(),
        }
    }

    fn state_name(&self, x: &TigerState) -> String {
        match x {
            TigerState::Playing => "playing".into(),
            TigerState::End => "END".into(),
        }
    }
}

/// One-shot Tiger with the given discount.
pub fn make_tiger<F: Scalar>(gamma: F) -> crate::Result<Tiger<F>> {
    if gamma <= F::zero() || gamma > F::one() {
        return Err(crate::PliteError::Argument(format!(
            "discount must lie in (0, 1], got {gamma}"
        )));
    }
    Ok(Tiger::new(gamma))
}
