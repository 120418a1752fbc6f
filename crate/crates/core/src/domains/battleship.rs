//! Battleship(n, k): k ships of lengths k+1, k, …, 2 hidden on an n × n
//! grid with no two ships touching, not even diagonally. The hidden value
//! is the whole layout; it is never enumerated, only sampled.

use std::marker::PhantomData;

use rand::seq::SliceRandom;
use rand::Rng;
use smallvec::{smallvec, SmallVec};

use crate::belief::Belief;
use crate::error::{PliteError, Result};
use crate::model::{Action, AugmentedState, Dist, HiddenSpace, Observation, PomdpLite};
use crate::scalar::Scalar;

pub const MISS: Observation = Observation::Obs(0);
pub const HIT: Observation = Observation::Obs(1);

/// Fixed-width bitset over grid cells (up to 16 × 16).
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSet([u64; 4]);

impl CellSet {
    pub const CAPACITY: usize = 256;

    pub fn single(cell: usize) -> Self {
        let mut s = CellSet::default();
        s.insert(cell);
        s
    }

    pub fn insert(&mut self, cell: usize) {
        self.0[cell >> 6] |= 1 << (cell & 63);
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.0[cell >> 6] & (1 << (cell & 63)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        CellSet(std::array::from_fn(|i| self.0[i] | other.0[i]))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        CellSet(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    pub fn difference(&self, other: &Self) -> Self {
        CellSet(std::array::from_fn(|i| self.0[i] & !other.0[i]))
    }

    pub fn intersects(&self, other: &Self) -> bool {
        (0..4).any(|i| self.0[i] & other.0[i] != 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        (0..4).all(|i| self.0[i] & !other.0[i] == 0)
    }

    /// Lowest member, if any.
    pub fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..Self::CAPACITY).filter(move |&c| self.contains(c))
    }
}

/// Cells covered by one ship position and their one-cell neighbourhood.
#[derive(Clone, Debug)]
struct ShipPlacement {
    cells: CellSet,
    halo: CellSet,
}

/// A full fleet layout: one placement index per ship.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    placements: SmallVec<[u16; 8]>,
    occupied: CellSet,
}

impl Layout {
    pub fn occupied(&self) -> &CellSet {
        &self.occupied
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct BattleState {
    pub fired: CellSet,
    pub hits: CellSet,
}

impl BattleState {
    pub fn misses(&self) -> CellSet {
        self.fired.difference(&self.hits)
    }
}

#[derive(Clone, Debug)]
pub struct Battleship<F> {
    n: usize,
    lengths: Vec<usize>,
    // placements[ship] lists every in-grid position of that ship.
    placements: Vec<Vec<ShipPlacement>>,
    total_cells: usize,
    mcmc_moves: usize,
    _scalar: PhantomData<F>,
}

impl<F: Scalar> Battleship<F> {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 || n * n > CellSet::CAPACITY {
            return Err(PliteError::Argument(format!(
                "grid size must lie in 2..=16, got {n}"
            )));
        }
        if k == 0 {
            return Err(PliteError::Argument("need at least one ship".into()));
        }
        let lengths: Vec<usize> = (2..=k + 1).rev().collect();
        if lengths[0] > n {
            return Err(PliteError::Argument(format!(
                "a ship of length {} does not fit in {n}x{n}",
                lengths[0]
            )));
        }
        let placements = lengths
            .iter()
            .map(|&len| enumerate_placements(n, len))
            .collect();
        Ok(Battleship {
            n,
            total_cells: lengths.iter().sum(),
            lengths,
            placements,
            mcmc_moves: 20,
            _scalar: PhantomData,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn ship_lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn total_ship_cells(&self) -> usize {
        self.total_cells
    }

    pub fn cell_action(&self, row: usize, col: usize) -> Action {
        Action((row * self.n + col) as u16)
    }

    /// Layout from explicit `(row, col, horizontal)` ship positions, largest
    /// ship first. Fails when a ship leaves the grid or two ships touch.
    pub fn layout_from(&self, ships: &[(usize, usize, bool)]) -> Result<Layout> {
        if ships.len() != self.lengths.len() {
            return Err(PliteError::Argument(format!(
                "expected {} ships",
                self.lengths.len()
            )));
        }
        let mut placements = SmallVec::new();
        for (j, &(row, col, horizontal)) in ships.iter().enumerate() {
            let wanted = ship_cells(self.n, self.lengths[j], row, col, horizontal)
                .ok_or_else(|| PliteError::Argument(format!("ship {j} leaves the grid")))?;
            let idx = self.placements[j]
                .iter()
                .position(|p| p.cells == wanted)
                .expect("every in-grid placement is enumerated");
            placements.push(idx as u16);
        }
        self.assemble(placements)
            .ok_or_else(|| PliteError::Argument("ships overlap or touch".into()))
    }

    /// Builds a layout when the placements respect the no-touching rule.
    fn assemble(&self, placements: SmallVec<[u16; 8]>) -> Option<Layout> {
        let mut occupied = CellSet::default();
        let mut blocked = CellSet::default();
        for (j, &p) in placements.iter().enumerate() {
            let ship = &self.placements[j][p as usize];
            if ship.cells.intersects(&blocked) {
                return None;
            }
            occupied = occupied.union(&ship.cells);
            blocked = blocked.union(&ship.halo);
        }
        Some(Layout {
            placements,
            occupied,
        })
    }

    pub fn is_valid(&self, layout: &Layout) -> bool {
        self.assemble(layout.placements.clone()).as_ref() == Some(layout)
    }

    /// Whether the layout explains every shot fired so far.
    pub fn consistent(&self, layout: &Layout, s: &BattleState) -> bool {
        layout.occupied.intersection(&s.fired) == s.hits
    }

    /// Uniform layout by whole-fleet rejection: propose every ship
    /// independently and retry from scratch on any conflict.
    pub fn sample_layout<R: Rng + ?Sized>(&self, rng: &mut R) -> Layout {
        loop {
            let mut placements = SmallVec::new();
            let mut occupied = CellSet::default();
            let mut blocked = CellSet::default();
            let mut ok = true;
            for j in 0..self.lengths.len() {
                let p = rng.gen_range(0..self.placements[j].len());
                let ship = &self.placements[j][p];
                if ship.cells.intersects(&blocked) {
                    ok = false;
                    break;
                }
                occupied = occupied.union(&ship.cells);
                blocked = blocked.union(&ship.halo);
                placements.push(p as u16);
            }
            if ok {
                return Layout {
                    placements,
                    occupied,
                };
            }
        }
    }

    /// Randomized depth-first search for a layout consistent with the shots
    /// in `s`. Returns `None` when `node_budget` expansions are exhausted.
    pub fn search_consistent<R: Rng + ?Sized>(
        &self,
        s: &BattleState,
        node_budget: usize,
        rng: &mut R,
    ) -> Option<Layout> {
        let ships = self.lengths.len();
        let mut chosen: Vec<Option<u16>> = vec![None; ships];
        let mut budget = node_budget;
        let misses = s.misses();
        if self.dfs(
            &mut chosen,
            CellSet::default(),
            CellSet::default(),
            &s.hits,
            &misses,
            &mut budget,
            rng,
        ) {
            let placements = chosen
                .into_iter()
                .map(|p| p.expect("all ships placed"))
                .collect();
            self.assemble(placements)
        } else {
            None
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<R: Rng + ?Sized>(
        &self,
        chosen: &mut [Option<u16>],
        occupied: CellSet,
        blocked: CellSet,
        hits: &CellSet,
        misses: &CellSet,
        budget: &mut usize,
        rng: &mut R,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let uncovered = hits.difference(&occupied);
        let mut open: Vec<usize> = (0..chosen.len()).filter(|&j| chosen[j].is_none()).collect();
        if open.is_empty() {
            return uncovered.is_empty();
        }
        let remaining: usize = open.iter().map(|&j| self.lengths[j]).sum();
        if uncovered.len() > remaining {
            return false;
        }
        open.shuffle(rng);
        let target = uncovered.first();
        // With hits left to explain, branch on ships covering the lowest
        // one; otherwise place the next open ship anywhere admissible.
        let ships_to_try: Vec<usize> = if target.is_some() {
            open.clone()
        } else {
            vec![open[0]]
        };
        for j in ships_to_try {
            let mut candidates: Vec<usize> = (0..self.placements[j].len())
                .filter(|&p| {
                    let ship = &self.placements[j][p];
                    let covers_target =
                        target.map_or(!ship.cells.intersects(hits), |t| ship.cells.contains(t));
                    covers_target
                        && !ship.cells.intersects(misses)
                        && !ship.cells.intersects(&blocked)
                        && !ship.halo.difference(&ship.cells).intersects(hits)
                })
                .collect();
            candidates.shuffle(rng);
            for p in candidates {
                let ship = &self.placements[j][p];
                chosen[j] = Some(p as u16);
                if self.dfs(
                    chosen,
                    occupied.union(&ship.cells),
                    blocked.union(&ship.halo),
                    hits,
                    misses,
                    budget,
                    rng,
                ) {
                    return true;
                }
                chosen[j] = None;
                if *budget == 0 {
                    return false;
                }
            }
        }
        false
    }

    /// Metropolis moves that relocate one ship at a time while keeping the
    /// layout valid and consistent with `s`. The target is uniform over
    /// consistent layouts and proposals are symmetric.
    pub fn mcmc_move<R: Rng + ?Sized>(
        &self,
        layout: &Layout,
        s: &BattleState,
        moves: usize,
        rng: &mut R,
    ) -> Layout {
        let mut current = layout.clone();
        for _ in 0..moves {
            let j = rng.gen_range(0..self.lengths.len());
            let p = rng.gen_range(0..self.placements[j].len()) as u16;
            if current.placements[j] == p {
                continue;
            }
            let mut proposal = current.placements.clone();
            proposal[j] = p;
            if let Some(candidate) = self.assemble(proposal) {
                if self.consistent(&candidate, s) {
                    current = candidate;
                }
            }
        }
        current
    }

    /// Per-cell occupancy probability under `b`.
    pub fn cell_marginals(&self, b: &Belief<Layout, F>) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for (_, layout, w) in b.support() {
            let w = w.to_f64_lossy();
            for c in layout.occupied.iter().take_while(|&c| c < self.n * self.n) {
                out[c] += w;
            }
        }
        out
    }
}

fn ship_cells(n: usize, len: usize, row: usize, col: usize, horizontal: bool) -> Option<CellSet> {
    let mut cells = CellSet::default();
    for i in 0..len {
        let (r, c) = if horizontal {
            (row, col + i)
        } else {
            (row + i, col)
        };
        if r >= n || c >= n {
            return None;
        }
        cells.insert(r * n + c);
    }
    Some(cells)
}

fn enumerate_placements(n: usize, len: usize) -> Vec<ShipPlacement> {
    let mut out = Vec::new();
    for horizontal in [true, false] {
        for row in 0..n {
            for col in 0..n {
                let Some(cells) = ship_cells(n, len, row, col, horizontal) else {
                    continue;
                };
                let mut halo = CellSet::default();
                for cell in cells.iter().take_while(|&c| c < n * n) {
                    let (r, c) = ((cell / n) as isize, (cell % n) as isize);
                    for dr in -1..=1 {
                        for dc in -1..=1 {
                            let (rr, cc) = (r + dr, c + dc);
                            if rr >= 0 && cc >= 0 && (rr as usize) < n && (cc as usize) < n {
                                halo.insert(rr as usize * n + cc as usize);
                            }
                        }
                    }
                }
                out.push(ShipPlacement { cells, halo });
            }
        }
        if len == 1 {
            break;
        }
    }
    out
}

impl<F: Scalar> PomdpLite for Battleship<F> {
    type Scalar = F;
    type X = BattleState;
    type Theta = Layout;

    fn hidden_space(&self) -> HiddenSpace<Layout> {
        HiddenSpace::Generative {
            size_hint: f64::INFINITY,
        }
    }

    fn prior_weight(&self, _theta: &Layout) -> F {
        F::zero()
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Layout {
        self.sample_layout(rng)
    }

    fn num_actions(&self) -> usize {
        self.n * self.n
    }

    fn legal_actions_into(&self, x: &BattleState, out: &mut Vec<Action>) {
        out.clear();
        if self.is_terminal(x) {
            return;
        }
        out.extend(
            (0..self.n * self.n)
                .filter(|&c| !x.fired.contains(c))
                .map(|c| Action(c as u16)),
        );
    }

    fn is_legal(&self, x: &BattleState, a: Action) -> bool {
        !self.is_terminal(x) && a.index() < self.n * self.n && !x.fired.contains(a.index())
    }

    fn random_legal_action<R: Rng + ?Sized>(&self, x: &BattleState, rng: &mut R) -> Option<Action> {
        let cells = self.n * self.n;
        if self.is_terminal(x) || x.fired.len() >= cells {
            return None;
        }
        loop {
            let c = rng.gen_range(0..cells);
            if !x.fired.contains(c) {
                return Some(Action(c as u16));
            }
        }
    }

    fn transition(&self, theta: &Layout, x: &BattleState, a: Action) -> Dist<BattleState, F> {
        let c = a.index();
        let mut next = *x;
        next.fired.insert(c);
        if theta.occupied.contains(c) {
            next.hits.insert(c);
        }
        smallvec![(next, F::one())]
    }

    fn observation(
        &self,
        theta: &Layout,
        _x_next: &BattleState,
        a: Action,
    ) -> Dist<Observation, F> {
        if theta.occupied.contains(a.index()) {
            smallvec![(HIT, F::one())]
        } else {
            smallvec![(MISS, F::one())]
        }
    }

    fn reward(&self, theta: &Layout, x: &BattleState, a: Action) -> F {
        if self.is_terminal(x) {
            return F::zero();
        }
        let c = a.index();
        let sinks_last = theta.occupied.contains(c)
            && !x.hits.contains(c)
            && x.hits.len() + 1 == self.total_cells;
        if sinks_last {
            F::from_count(self.n * self.n) - F::one()
        } else {
            -F::one()
        }
    }

    fn gamma(&self) -> F {
        F::one()
    }

    fn initial_x(&self) -> BattleState {
        BattleState {
            fired: CellSet::default(),
            hits: CellSet::default(),
        }
    }

    fn is_terminal(&self, x: &BattleState) -> bool {
        x.hits.len() >= self.total_cells
    }

    fn outcome_key(&self, x: &BattleState, a: Action) -> Option<u64> {
        let last = (x.hits.len() + 1 == self.total_cells) as u64;
        Some(((a.0 as u64) << 1) | last)
    }

    fn reinvigorate<R: Rng + ?Sized>(
        &self,
        belief: &Belief<Layout, F>,
        s: &AugmentedState<BattleState>,
        target: usize,
        rng: &mut R,
    ) -> Option<Belief<Layout, F>> {
        let mut seeds: Vec<Layout> = belief
            .support()
            .filter(|(_, layout, _)| self.consistent(layout, &s.x))
            .map(|(_, layout, _)| layout.clone())
            .collect();
        seeds.dedup();
        let mut attempts = 0;
        while seeds.len() < 16 && attempts < 32 {
            attempts += 1;
            if let Some(found) = self.search_consistent(&s.x, 20_000, rng) {
                seeds.push(found);
            }
        }
        if seeds.is_empty() {
            return None;
        }
        let particles = (0..target)
            .map(|_| {
                let start = &seeds[rng.gen_range(0..seeds.len())];
                self.mcmc_move(start, &s.x, self.mcmc_moves, rng)
            })
            .collect();
        Belief::particles(particles).ok()
    }

    fn num_observations(&self) -> usize {
        2
    }

    fn return_range_hint(&self) -> f64 {
        (self.n * self.n) as f64
    }

    fn action_name(&self, a: Action) -> String {
        let c = a.index();
        format!("fire{}_{}", c / self.n, c % self.n)
    }

    fn observation_name(&self, o: Observation) -> String {
        match o {
            Observation::Null => "null".into(),
            HIT => "hit".into(),
            MISS => "miss".into(),
            Observation::Obs(k) => format!("o{k}"),
        }
    }

    fn theta_name(&self, theta: &Layout) -> String {
        let cells: Vec<String> = theta.occupied.iter().map(|c| c.to_string()).collect();
        format!("ships[{}]", cells.join(" "))
    }
}

/// Battleship(n, k) after confirming a legal fleet layout exists.
pub fn make_battleship<F: Scalar, R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Battleship<F>> {
    let game = Battleship::new(n, k)?;
    let empty = game.initial_x();
    if game.search_consistent(&empty, 200_000, rng).is_none() {
        return Err(PliteError::Argument(format!(
            "no legal layout of {k} ships fits a {n}x{n} grid"
        )));
    }
    Ok(game)
}
