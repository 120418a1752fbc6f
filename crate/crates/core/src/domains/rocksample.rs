//! RockSample(n, k): a rover on an n × n grid with k rocks of unknown
//! quality. The hidden value is the good/bad assignment of all rocks,
//! stored as a bitmask; it never changes.

use std::marker::PhantomData;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::smallvec;

use crate::error::{PliteError, Result};
use crate::model::{Action, Dist, HiddenSpace, Observation, PomdpLite};
use crate::scalar::Scalar;

pub const NORTH: Action = Action(0);
pub const SOUTH: Action = Action(1);
pub const EAST: Action = Action(2);
pub const WEST: Action = Action(3);
pub const SAMPLE: Action = Action(4);
const FIRST_SENSE: u16 = 5;

pub const GOOD: Observation = Observation::Obs(0);
pub const BAD: Observation = Observation::Obs(1);

/// Distance at which sensing efficiency halves.
pub const HALF_EFFICIENCY_DISTANCE: f64 = 20.0;

/// Largest rock count whose assignment space is listed explicitly.
const ENUMERATION_LIMIT: usize = 16;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RockState {
    pub x: u8,
    pub y: u8,
    /// Bit i set once rock i has been sampled.
    pub sampled: u32,
    pub exited: bool,
}

/// Rock quality assignment; bit i set means rock i is good.
pub type RockAssignment = u32;

#[derive(Clone, Debug)]
pub struct RockSample<F> {
    n: u8,
    rocks: Vec<(u8, u8)>,
    start: (u8, u8),
    // rock_at[x * n + y]
    rock_at: Vec<Option<u8>>,
    // sense_accuracy[rock][x * n + y]
    sense_accuracy: Vec<Vec<f64>>,
    assignments: Option<Arc<[RockAssignment]>>,
    gamma: F,
    _scalar: PhantomData<F>,
}

/// Probability that sensing at distance `d` reports the true quality.
pub fn sense_accuracy(d: f64) -> f64 {
    let efficiency = (-d / HALF_EFFICIENCY_DISTANCE).exp2();
    0.5 * (1.0 + efficiency)
}

impl<F: Scalar> RockSample<F> {
    /// Grid with explicit rock cells and start position.
    pub fn with_layout(n: usize, rocks: Vec<(u8, u8)>, start: (u8, u8)) -> Result<Self> {
        if n < 2 || n > 255 {
            return Err(PliteError::Argument(format!(
                "grid size must lie in 2..=255, got {n}"
            )));
        }
        if rocks.is_empty() || rocks.len() > 32 {
            return Err(PliteError::Argument(format!(
                "rock count must lie in 1..=32, got {}",
                rocks.len()
            )));
        }
        let n8 = n as u8;
        let in_grid = |(x, y): (u8, u8)| x < n8 && y < n8;
        if !in_grid(start) || rocks.iter().any(|&r| !in_grid(r)) {
            return Err(PliteError::Argument(
                "rock or start cell outside the grid".into(),
            ));
        }
        let mut rock_at = vec![None; n * n];
        for (i, &(x, y)) in rocks.iter().enumerate() {
            let cell = x as usize * n + y as usize;
            if rock_at[cell].is_some() {
                return Err(PliteError::Argument(format!(
                    "two rocks share cell ({x}, {y})"
                )));
            }
            rock_at[cell] = Some(i as u8);
        }
        let sense_accuracy = rocks
            .iter()
            .map(|&(rx, ry)| {
                (0..n * n)
                    .map(|cell| {
                        let (x, y) = ((cell / n) as f64, (cell % n) as f64);
                        let d = ((x - rx as f64).powi(2) + (y - ry as f64).powi(2)).sqrt();
                        sense_accuracy(d)
                    })
                    .collect()
            })
            .collect();
        let k = rocks.len();
        let assignments =
            (k <= ENUMERATION_LIMIT).then(|| (0..(1u32 << k)).collect::<Vec<_>>().into());
        Ok(RockSample {
            n: n8,
            rocks,
            start,
            rock_at,
            sense_accuracy,
            assignments,
            gamma: F::ratio(95, 100),
            _scalar: PhantomData,
        })
    }

    pub fn size(&self) -> usize {
        self.n as usize
    }

    pub fn rocks(&self) -> &[(u8, u8)] {
        &self.rocks
    }

    pub fn num_rocks(&self) -> usize {
        self.rocks.len()
    }

    pub fn sense_action(&self, rock: usize) -> Action {
        Action(FIRST_SENSE + rock as u16)
    }

    fn cell(&self, x: u8, y: u8) -> usize {
        x as usize * self.n as usize + y as usize
    }

    fn rock_here(&self, s: &RockState) -> Option<usize> {
        if s.exited {
            return None;
        }
        self.rock_at[self.cell(s.x, s.y)].map(|r| r as usize)
    }

    /// The single absorbing state reached by leaving the east edge.
    fn exit_state(&self) -> RockState {
        RockState {
            x: self.n - 1,
            y: 0,
            sampled: 0,
            exited: true,
        }
    }

    /// Accuracy of sensing `rock` from `(x, y)`.
    pub fn accuracy_at(&self, rock: usize, x: u8, y: u8) -> f64 {
        self.sense_accuracy[rock][self.cell(x, y)]
    }
}

impl<F: Scalar> PomdpLite for RockSample<F> {
    type Scalar = F;
    type X = RockState;
    type Theta = RockAssignment;

    fn hidden_space(&self) -> HiddenSpace<RockAssignment> {
        match &self.assignments {
            Some(all) => HiddenSpace::Enumerated(all.clone()),
            None => HiddenSpace::Generative {
                size_hint: 2f64.powi(self.rocks.len() as i32),
            },
        }
    }

    fn prior_weight(&self, _theta: &RockAssignment) -> F {
        F::one() / F::ratio(1i64 << self.rocks.len(), 1)
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> RockAssignment {
        let k = self.rocks.len();
        let mask = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        rng.gen::<u32>() & mask
    }

    fn num_actions(&self) -> usize {
        FIRST_SENSE as usize + self.rocks.len()
    }

    fn legal_actions_into(&self, s: &RockState, out: &mut Vec<Action>) {
        out.clear();
        if s.exited {
            return;
        }
        if s.y + 1 < self.n {
            out.push(NORTH);
        }
        if s.y > 0 {
            out.push(SOUTH);
        }
        out.push(EAST);
        if s.x > 0 {
            out.push(WEST);
        }
        if let Some(r) = self.rock_here(s) {
            if s.sampled & (1 << r) == 0 {
                out.push(SAMPLE);
            }
        }
        out.extend((0..self.rocks.len() as u16).map(|i| Action(FIRST_SENSE + i)));
    }

    fn random_legal_action<R: Rng + ?Sized>(&self, s: &RockState, rng: &mut R) -> Option<Action> {
        if s.exited {
            return None;
        }
        let mut moves = [EAST; 5];
        let mut count = 0;
        for (ok, a) in [
            (s.y + 1 < self.n, NORTH),
            (s.y > 0, SOUTH),
            (true, EAST),
            (s.x > 0, WEST),
            (
                self.rock_here(s).is_some_and(|r| s.sampled & (1 << r) == 0),
                SAMPLE,
            ),
        ] {
            if ok {
                moves[count] = a;
                count += 1;
            }
        }
        let k = rng.gen_range(0..count + self.rocks.len());
        Some(if k < count {
            moves[k]
        } else {
            Action(FIRST_SENSE + (k - count) as u16)
        })
    }

    fn transition(&self, _theta: &RockAssignment, s: &RockState, a: Action) -> Dist<RockState, F> {
        let mut next = *s;
        if !s.exited {
            match a {
                NORTH => next.y += 1,
                SOUTH => next.y -= 1,
                WEST => next.x -= 1,
                EAST => {
                    if s.x + 1 == self.n {
                        next = self.exit_state();
                    } else {
                        next.x += 1;
                    }
                }
                SAMPLE => {
                    if let Some(r) = self.rock_here(s) {
                        next.sampled |= 1 << r;
                    }
                }
                _ => {}
            }
        }
        smallvec![(next, F::one())]
    }

    fn observation(
        &self,
        theta: &RockAssignment,
        x_next: &RockState,
        a: Action,
    ) -> Dist<Observation, F> {
        if a.0 < FIRST_SENSE || x_next.exited {
            return smallvec![(Observation::Null, F::one())];
        }
        let rock = (a.0 - FIRST_SENSE) as usize;
        let acc = self.accuracy_at(rock, x_next.x, x_next.y);
        let p_correct = F::from_f64_lossy(acc);
        let p_wrong = F::one() - p_correct;
        if theta & (1 << rock) != 0 {
            smallvec![(GOOD, p_correct), (BAD, p_wrong)]
        } else {
            smallvec![(GOOD, p_wrong), (BAD, p_correct)]
        }
    }

    fn reward(&self, theta: &RockAssignment, s: &RockState, a: Action) -> F {
        if s.exited {
            return F::zero();
        }
        match a {
            EAST if s.x + 1 == self.n => F::ratio(10, 1),
            SAMPLE => match self.rock_here(s) {
                Some(r) if s.sampled & (1 << r) == 0 => {
                    if theta & (1 << r) != 0 {
                        F::ratio(10, 1)
                    } else {
                        F::ratio(-10, 1)
                    }
                }
                _ => F::zero(),
            },
            _ => F::zero(),
        }
    }

    fn gamma(&self) -> F {
        self.gamma
    }

    fn initial_x(&self) -> RockState {
        RockState {
            x: self.start.0,
            y: self.start.1,
            sampled: 0,
            exited: false,
        }
    }

    fn is_terminal(&self, s: &RockState) -> bool {
        s.exited
    }

    fn outcome_key(&self, s: &RockState, a: Action) -> Option<u64> {
        let key = match a {
            SAMPLE => match self.rock_here(s) {
                Some(r) if s.sampled & (1 << r) == 0 => (1 << 40) | r as u64,
                _ => 2 << 40,
            },
            _ if a.0 >= FIRST_SENSE && !s.exited => {
                (3 << 40) | ((a.0 as u64) << 20) | self.cell(s.x, s.y) as u64
            }
            _ => {
                let edge = (s.x + 1 == self.n) as u64;
                (4 << 40) | ((a.0 as u64) << 2) | (edge << 1) | s.exited as u64
            }
        };
        Some(key)
    }

    fn num_observations(&self) -> usize {
        2
    }

    fn enumerate_states(&self) -> Option<Vec<RockState>> {
        if self.rocks.len() > 12 {
            return None;
        }
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                for sampled in 0..(1u32 << self.rocks.len()) {
                    out.push(RockState {
                        x,
                        y,
                        sampled,
                        exited: false,
                    });
                }
            }
        }
        out.push(self.exit_state());
        Some(out)
    }

    fn return_range_hint(&self) -> f64 {
        20.0
    }

    fn action_name(&self, a: Action) -> String {
        match a {
            NORTH => "north".into(),
            SOUTH => "south".into(),
            EAST => "east".into(),
            WEST => "west".into(),
            SAMPLE => "sample".into(),
            Action(k) => format!("check{}", k - FIRST_SENSE),
        }
    }

    fn observation_name(&self, o: Observation) -> String {
        match o {
            Observation::Null => "null".into(),
            GOOD => "good".into(),
            BAD => "bad".into(),
            Observation::Obs(k) => format!("o{k}"),
        }
    }
}

/// RockSample(n, k) with rock cells drawn from `layout_seed`. The rover
/// starts at the west edge, mid-height; no rock shares its cell.
pub fn make_rocksample<F: Scalar>(n: usize, k: usize, layout_seed: u64) -> Result<RockSample<F>> {
    if n < 2 {
        return Err(PliteError::Argument(format!(
            "grid size must be at least 2, got {n}"
        )));
    }
    if k == 0 || k > 32 {
        return Err(PliteError::Argument(format!(
            "rock count must lie in 1..=32, got {k}"
        )));
    }
    let start = (0u8, (n / 2) as u8);
    let mut cells: Vec<(u8, u8)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x as u8, y as u8)))
        .filter(|&c| c != start)
        .collect();
    if cells.len() < k {
        return Err(PliteError::Argument(format!(
            "{k} rocks do not fit in a {n}x{n} grid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(layout_seed);
    cells.shuffle(&mut rng);
    cells.truncate(k);
    RockSample::with_layout(n, cells, start)
}

/// Rock cells and start of the customary benchmark instances, as (x, y).
pub fn standard_layout(n: usize, k: usize) -> Option<(Vec<(u8, u8)>, (u8, u8))> {
    match (n, k) {
        (7, 8) => Some((
            vec![
                (2, 0),
                (0, 1),
                (3, 1),
                (6, 3),
                (2, 4),
                (3, 4),
                (5, 5),
                (1, 6),
            ],
            (0, 3),
        )),
        (11, 11) => Some((
            vec![
                (0, 3),
                (0, 7),
                (1, 8),
                (2, 4),
                (3, 3),
                (3, 8),
                (4, 3),
                (5, 8),
                (6, 1),
                (9, 3),
                (9, 9),
            ],
            (0, 5),
        )),
        _ => None,
    }
}

/// The customary layout for RS(7,8) and RS(11,11); seed 0 otherwise.
pub fn make_standard_rocksample<F: Scalar>(n: usize, k: usize) -> Result<RockSample<F>> {
    match standard_layout(n, k) {
        Some((rocks, start)) => RockSample::with_layout(n, rocks, start),
        None => make_rocksample(n, k, 0),
    }
}
