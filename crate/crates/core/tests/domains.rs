use plite_core::domains::battleship::{HIT, MISS};
use plite_core::domains::rocksample::{
    sense_accuracy, standard_layout, BAD, EAST, GOOD, NORTH, SAMPLE, WEST,
};
use plite_core::domains::{
    make_battleship, make_deterministic_chain, make_rocksample, make_standard_rocksample,
    BattleState, Battleship, CellSet, Layout,
};
use plite_core::{sample_step, AugmentedState, PomdpLite};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lengths of the 8-connected components of `cells`, or `None` when some
/// component is not a straight horizontal or vertical run.
fn straight_components(n: usize, cells: &CellSet) -> Option<Vec<usize>> {
    let mut seen = vec![false; n * n];
    let mut lengths = Vec::new();
    for start in cells.iter() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(c) = stack.pop() {
            comp.push(c);
            let (r, col) = ((c / n) as i64, (c % n) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, col + dc);
                    if (dr, dc) == (0, 0) || nr < 0 || nc < 0 || nr >= n as i64 || nc >= n as i64 {
                        continue;
                    }
                    let j = nr as usize * n + nc as usize;
                    if cells.contains(j) && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        let rows: Vec<usize> = comp.iter().map(|c| c / n).collect();
        let cols: Vec<usize> = comp.iter().map(|c| c % n).collect();
        let same_row = rows.iter().all(|&r| r == rows[0]);
        let same_col = cols.iter().all(|&c| c == cols[0]);
        let contiguous = if same_row {
            cols.windows(2).all(|w| w[1] == w[0] + 1)
        } else if same_col {
            rows.windows(2).all(|w| w[1] == w[0] + 1)
        } else {
            false
        };
        if !contiguous {
            return None;
        }
        lengths.push(comp.len());
    }
    lengths.sort_unstable();
    Some(lengths)
}

fn expected_lengths(bs: &Battleship<f64>) -> Vec<usize> {
    let mut v = bs.ship_lengths().to_vec();
    v.sort_unstable();
    v
}

#[test]
fn prior_layouts_never_touch() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let bs = make_battleship::<f64, _>(10, 5, &mut rng).unwrap();
    assert_eq!(bs.ship_lengths(), &[6, 5, 4, 3, 2]);
    let want = expected_lengths(&bs);
    for i in 0..100_000 {
        let layout = bs.sample_prior(&mut rng);
        assert_eq!(layout.occupied().len(), 20);
        assert_eq!(
            straight_components(10, layout.occupied()).as_deref(),
            Some(want.as_slice()),
            "sample {i}"
        );
    }
}

#[test]
fn explicit_layouts_enforce_spacing() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let bs = make_battleship::<f64, _>(5, 2, &mut rng).unwrap();
    let ok = bs.layout_from(&[(0, 0, true), (2, 0, true)]).unwrap();
    assert!(bs.is_valid(&ok));
    assert!(bs.layout_from(&[(0, 0, true), (1, 0, true)]).is_err());
    assert!(bs.layout_from(&[(0, 0, true), (1, 3, false)]).is_err());
    assert!(bs.layout_from(&[(0, 3, true), (2, 0, true)]).is_err());
    assert!(bs.layout_from(&[(0, 0, true)]).is_err());
}

fn fire(bs: &Battleship<f64>, layout: &Layout, s: &mut AugmentedState<BattleState>, cell: usize, rng: &mut ChaCha8Rng) {
    let a = plite_core::Action(cell as u16);
    *s = sample_step(bs, layout, s, a, rng).unwrap().next;
}

#[test]
fn shots_report_hits_and_the_game_ends_when_the_fleet_sinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bs = make_battleship::<f64, _>(6, 3, &mut rng).unwrap();
    let layout = bs.sample_prior(&mut rng);
    let mut s = AugmentedState::start(bs.initial_x());
    let mut total = 0.0;
    for cell in 0..36 {
        if bs.is_terminal(&s.x) {
            break;
        }
        let a = plite_core::Action(cell as u16);
        total += bs.reward(&layout, &s.x, a);
        fire(&bs, &layout, &mut s, cell, &mut rng);
        let expect = if layout.occupied().contains(cell) { HIT } else { MISS };
        assert_eq!(s.obs, expect);
        assert!(bs.consistent(&layout, &s.x));
    }
    assert!(bs.is_terminal(&s.x));
    assert_eq!(s.x.hits, *layout.occupied());
    assert_eq!(total, 36.0 - s.x.fired.len() as f64);
    assert!(bs.legal_actions(&s.x).is_empty());
}

#[test]
fn reinvigoration_stays_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bs = make_battleship::<f64, _>(8, 3, &mut rng).unwrap();
    let want = expected_lengths(&bs);
    for _ in 0..20 {
        let truth = bs.sample_prior(&mut rng);
        let mut s = AugmentedState::start(bs.initial_x());
        for _ in 0..15 {
            let cell = rng.gen_range(0..64);
            if !s.x.fired.contains(cell) {
                fire(&bs, &truth, &mut s, cell, &mut rng);
            }
        }
        let found = bs.search_consistent(&s.x, 1_000_000, &mut rng).expect("truth is consistent");
        assert!(bs.is_valid(&found) && bs.consistent(&found, &s.x));
        let moved = bs.mcmc_move(&found, &s.x, 200, &mut rng);
        assert!(bs.is_valid(&moved) && bs.consistent(&moved, &s.x));
        assert_eq!(straight_components(8, moved.occupied()).as_deref(), Some(want.as_slice()));
    }
}

#[test]
fn battleship_rejects_bad_sizes() {
    assert!(Battleship::<f64>::new(1, 1).is_err());
    assert!(Battleship::<f64>::new(17, 1).is_err());
    assert!(Battleship::<f64>::new(4, 0).is_err());
    assert!(Battleship::<f64>::new(4, 4).is_err());
}

#[test]
fn sensing_accuracy_falls_with_distance() {
    assert_eq!(sense_accuracy(0.0), 1.0);
    assert!((sense_accuracy(20.0) - 0.75).abs() < 1e-15);
    assert!((sense_accuracy(40.0) - 0.625).abs() < 1e-15);
    let rs = make_standard_rocksample::<f64>(7, 8).unwrap();
    for (i, &(rx, ry)) in rs.rocks().iter().enumerate() {
        for x in 0..7u8 {
            for y in 0..7u8 {
                let d = ((rx as f64 - x as f64).powi(2) + (ry as f64 - y as f64).powi(2)).sqrt();
                assert!((rs.accuracy_at(i, x, y) - sense_accuracy(d)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sensing_frequencies_match_the_accuracy() {
    let rs = make_standard_rocksample::<f64>(7, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = AugmentedState::start(rs.initial_x());
    let theta = 0b0000_0001u32;
    for rock in [0usize, 3] {
        let a = rs.sense_action(rock);
        let acc = rs.accuracy_at(rock, s.x.x, s.x.y);
        let n = 20_000;
        let correct = (0..n)
            .filter(|_| {
                let out = sample_step(&rs, &theta, &s, a, &mut rng).unwrap();
                assert_eq!(out.next.x, s.x);
                out.next.obs == if theta & (1 << rock) != 0 { GOOD } else { BAD }
            })
            .count();
        assert!((correct as f64 / n as f64 - acc).abs() < 0.015, "rock {rock}");
    }
}

#[test]
fn sampling_pays_once() {
    let rs = make_rocksample::<f64>(3, 1, 0).unwrap();
    let (rx, ry) = rs.rocks()[0];
    let mut x = rs.initial_x();
    x.x = rx;
    x.y = ry;
    assert!(rs.legal_actions(&x).contains(&SAMPLE));
    assert_eq!(rs.reward(&1, &x, SAMPLE), 10.0);
    assert_eq!(rs.reward(&0, &x, SAMPLE), -10.0);
    let after = rs.transition(&1, &x, SAMPLE)[0].0;
    assert_eq!(after.sampled, 1);
    assert!(!rs.legal_actions(&after).contains(&SAMPLE));
    assert_eq!(rs.transition(&1, &after, NORTH).len(), 1);
}

#[test]
fn moves_stay_on_the_grid() {
    let rs = make_rocksample::<f64>(4, 2, 1).unwrap();
    let mut x = rs.initial_x();
    x.x = 0;
    x.y = 0;
    let legal = rs.legal_actions(&x);
    assert!(!legal.contains(&WEST));
    assert!(legal.contains(&EAST) && legal.contains(&NORTH));
    x.x = 3;
    let exit = rs.transition(&0, &x, EAST)[0].0;
    assert!(exit.exited && rs.is_terminal(&exit));
    assert_eq!(rs.reward(&0, &x, EAST), 10.0);
}

#[test]
fn standard_layouts_are_well_formed() {
    for (n, k) in [(7usize, 8usize), (11, 11)] {
        let (rocks, start) = standard_layout(n, k).unwrap();
        assert_eq!(rocks.len(), k);
        let mut sorted = rocks.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), k);
        assert!(rocks.iter().all(|&(x, y)| (x as usize) < n && (y as usize) < n));
        assert!(!rocks.contains(&start));
        let rs = make_standard_rocksample::<f64>(n, k).unwrap();
        assert_eq!((rs.initial_x().x, rs.initial_x().y), start);
        assert_eq!(rs.num_actions(), 5 + k);
    }
    assert!(standard_layout(5, 5).is_none());
    assert!(make_rocksample::<f64>(2, 4, 0).is_err());
    assert!(make_rocksample::<f64>(4, 0, 0).is_err());
}

#[test]
fn seeded_layouts_are_reproducible() {
    let a = make_rocksample::<f64>(6, 5, 42).unwrap();
    let b = make_rocksample::<f64>(6, 5, 42).unwrap();
    assert_eq!(a.rocks(), b.rocks());
}

#[test]
fn chain_variants_have_one_path_to_the_goal() {
    let chain = make_deterministic_chain::<f64>(4, 6).unwrap();
    for v in 0..4 {
        let mut x = chain.initial_x();
        let mut steps = 0;
        while x != chain.goal() {
            let forward: Vec<usize> = [plite_core::Action(0), plite_core::Action(1)]
                .iter()
                .map(|&a| chain.successor(v, x, a))
                .filter(|&n| n == x + 1)
                .collect();
            assert_eq!(forward.len(), 1, "variant {v} at {x}");
            x = forward[0];
            steps += 1;
        }
        assert_eq!(steps, chain.length() - 1);
        assert!(chain.is_terminal(&chain.goal()));
    }
}
