use plite_core::domains::rocksample::{EAST, SAMPLE};
use plite_core::domains::tiger::{HEAR_LEFT, HEAR_RIGHT, LISTEN, OPEN_LEFT, OPEN_RIGHT};
use plite_core::domains::{make_battleship, make_rocksample, make_tiger, RockState, TigerSide, TigerState};
use plite_core::model::check_normalization;
use plite_core::theory::{open_loop_return_belief, open_loop_return_mixture};
use plite_core::{
    history_fold, indexed_mdp_view, initial_belief, legal_actions, sample_step, view_for, Action,
    AugmentedState, BeliefConfig, Dist, Exact, HiddenSpace, Observation, PliteError, PomdpLite,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::smallvec;

fn start<X>(x: X) -> AugmentedState<X> {
    AugmentedState::start(x)
}

#[test]
fn tiger_listen_under_left() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let view = indexed_mdp_view(&tiger, 0).unwrap();
    assert_eq!(*view.theta(), TigerSide::Left);
    let mut t = view.transition(&start(TigerState::Playing), LISTEN);
    t.sort_by(|a, b| a.0.obs.cmp(&b.0.obs));
    let listen: Vec<_> = t.into_iter().collect();
    assert_eq!(
        listen,
        vec![
            (AugmentedState::new(TigerState::Playing, HEAR_LEFT), 0.85),
            (AugmentedState::new(TigerState::Playing, HEAR_RIGHT), 0.15),
        ]
    );
    assert_eq!(view.reward(&start(TigerState::Playing), LISTEN), -1.0);
}

#[test]
fn tiger_open_right_under_left() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let view = indexed_mdp_view(&tiger, 0).unwrap();
    let t: Vec<_> = view
        .transition(&start(TigerState::Playing), OPEN_RIGHT)
        .into_iter()
        .collect();
    assert_eq!(t, vec![(start(TigerState::End), 1.0)]);
    assert_eq!(view.reward(&start(TigerState::Playing), OPEN_RIGHT), 10.0);
    assert_eq!(view.gamma(), 0.95);
}

#[test]
fn view_index_out_of_range() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    assert!(matches!(indexed_mdp_view(&tiger, 2), Err(PliteError::Argument(_))));
}

#[test]
fn view_marginal_recovers_state_transition() {
    let rs = make_rocksample::<f64>(5, 3, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let states = rs.enumerate_states().unwrap();
    for _ in 0..200 {
        let theta: u32 = rng.gen_range(0..8);
        let x = states[rng.gen_range(0..states.len())];
        if rs.is_terminal(&x) {
            continue;
        }
        for a in rs.legal_actions(&x) {
            let view = view_for(&rs, theta);
            let joint = view.transition(&start(x), a);
            let total: f64 = joint.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() <= 1e-12);
            for (x_next, p) in rs.transition(&theta, &x, a) {
                let marginal: f64 = joint.iter().filter(|(s, _)| s.x == x_next).map(|(_, p)| p).sum();
                assert!((marginal - p).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn domains_are_normalized() {
    check_normalization(&make_tiger::<f64>(0.95).unwrap(), 1e-12).unwrap();
    check_normalization(&make_rocksample::<f64>(4, 2, 3).unwrap(), 1e-12).unwrap();
    check_normalization(&plite_core::domains::make_deterministic_chain::<f64>(4, 5).unwrap(), 1e-12)
        .unwrap();
}

#[test]
fn tiger_open_left_under_right() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let out = sample_step(&tiger, &TigerSide::Right, &start(TigerState::Playing), OPEN_LEFT, &mut rng).unwrap();
    assert_eq!(out.next, start(TigerState::End));
    assert_eq!(out.reward, 10.0);
    assert_eq!(out.theta_next, TigerSide::Right);
}

#[test]
fn sample_step_preconditions() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let end = start(TigerState::End);
    assert!(matches!(
        sample_step(&tiger, &TigerSide::Left, &end, LISTEN, &mut rng),
        Err(PliteError::State(_))
    ));
    assert!(matches!(
        sample_step(&tiger, &TigerSide::Left, &start(TigerState::Playing), Action(7), &mut rng),
        Err(PliteError::Argument(_))
    ));
}

#[test]
fn sample_step_is_seeded_and_static() {
    let rs = make_rocksample::<f64>(7, 8, 0).unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = start(rs.initial_x());
        let mut trace = Vec::new();
        for _ in 0..40 {
            if rs.is_terminal(&s.x) {
                break;
            }
            let a = rs.random_legal_action(&s.x, &mut rng).unwrap();
            let out = sample_step(&rs, &0b1010_0101, &s, a, &mut rng).unwrap();
            assert_eq!(out.theta_next, 0b1010_0101);
            trace.push((a, out.next.clone(), out.reward));
            s = out.next;
        }
        trace
    };
    assert_eq!(draw(4), draw(4));
    assert_ne!(draw(4), draw(5));
}

#[test]
fn rocksample_east_edge_exits() {
    let rs = make_rocksample::<f64>(5, 2, 0).unwrap();
    let x = RockState { x: 4, y: 2, sampled: 0, exited: false };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = sample_step(&rs, &0, &start(x), EAST, &mut rng).unwrap();
    assert!(rs.is_terminal(&out.next.x));
    assert_eq!(out.next.obs, Observation::Null);
    assert_eq!(out.reward, 10.0);
}

#[test]
fn rocksample_random_actions_are_legal() {
    let rs = make_rocksample::<f64>(7, 8, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = vec![0usize; rs.num_actions()];
    for x in rs.enumerate_states().unwrap() {
        if rs.is_terminal(&x) {
            assert!(rs.random_legal_action(&x, &mut rng).is_none());
            continue;
        }
        let legal = rs.legal_actions(&x);
        for _ in 0..4 {
            let a = rs.random_legal_action(&x, &mut rng).unwrap();
            assert!(legal.contains(&a), "{x:?} {a:?}");
            counts[a.index()] += 1;
        }
        assert_eq!(legal.contains(&SAMPLE), rs.is_legal(&x, SAMPLE));
    }
    assert!(counts.iter().all(|&c| c > 0));
}

#[test]
fn legal_action_sets() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    assert_eq!(
        legal_actions(&tiger, &start(TigerState::Playing)),
        vec![OPEN_LEFT, OPEN_RIGHT, LISTEN]
    );
    assert!(legal_actions(&tiger, &start(TigerState::End)).is_empty());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bs = make_battleship::<f64, _>(6, 2, &mut rng).unwrap();
    let layout = bs.sample_prior(&mut rng);
    let s0 = start(bs.initial_x());
    let fire = bs.cell_action(2, 3);
    let s1 = sample_step(&bs, &layout, &s0, fire, &mut rng).unwrap().next;
    let legal = legal_actions(&bs, &s1);
    assert_eq!(legal.len(), 35);
    assert!(!legal.contains(&fire));
}

/// Three hidden values that rotate on every step.
struct Rotor;

impl PomdpLite for Rotor {
    type Scalar = f64;
    type X = u8;
    type Theta = u8;

    fn hidden_space(&self) -> HiddenSpace<u8> {
        HiddenSpace::Enumerated(vec![0, 1, 2].into())
    }
    fn prior_weight(&self, _theta: &u8) -> f64 {
        1.0 / 3.0
    }
    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        rng.gen_range(0..3)
    }
    fn num_actions(&self) -> usize {
        1
    }
    fn legal_actions_into(&self, _x: &u8, out: &mut Vec<Action>) {
        out.clear();
        out.push(Action(0));
    }
    fn transition(&self, _theta: &u8, x: &u8, _a: Action) -> Dist<u8, f64> {
        smallvec![(*x, 1.0)]
    }
    fn observation(&self, theta: &u8, _x: &u8, _a: Action) -> Dist<Observation, f64> {
        smallvec![(Observation::Obs(*theta as u16), 1.0)]
    }
    fn reward(&self, theta: &u8, _x: &u8, _a: Action) -> f64 {
        *theta as f64
    }
    fn gamma(&self) -> f64 {
        0.9
    }
    fn initial_x(&self) -> u8 {
        0
    }
    fn is_terminal(&self, _x: &u8) -> bool {
        false
    }
    fn advance(&self, theta: &u8, _x: &u8, _a: Action) -> u8 {
        (theta + 1) % 3
    }
    fn is_static(&self) -> bool {
        false
    }
    fn num_observations(&self) -> usize {
        3
    }
}

#[test]
fn history_fold_cyclic() {
    let history = vec![(0u8, Action(0)); 4];
    for theta0 in 0..3u8 {
        assert_eq!(history_fold(&Rotor, &theta0, &history), (theta0 + 4) % 3);
        assert_eq!(history_fold(&Rotor, &theta0, &[]), theta0);
    }
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let listens = vec![(TigerState::Playing, LISTEN); 5];
    assert_eq!(history_fold(&tiger, &TigerSide::Right, &listens), TigerSide::Right);
}

#[test]
fn incremental_theta_matches_history_fold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let theta0 = rng.gen_range(0..3u8);
        let mut theta = theta0;
        let mut s = start(0u8);
        let mut history = Vec::new();
        for _ in 0..rng.gen_range(0..12) {
            let out = sample_step(&Rotor, &theta, &s, Action(0), &mut rng).unwrap();
            history.push((s.x, Action(0)));
            assert_eq!(out.next.obs, Observation::Obs(out.theta_next as u16));
            theta = out.theta_next;
            s = out.next;
        }
        assert_eq!(theta, history_fold(&Rotor, &theta0, &history));
    }
}

fn all_sequences(len: usize) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|seq| {
                [OPEN_LEFT, OPEN_RIGHT, LISTEN].into_iter().map(move |a| {
                    let mut next = seq.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn belief_recursion_equals_indexed_mixture_on_tiger() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let exact = make_tiger::<Exact>(Exact::new(19, 20)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = initial_belief(&tiger, &BeliefConfig::default(), &mut rng).unwrap();
    let bx = initial_belief(&exact, &BeliefConfig::default(), &mut rng).unwrap();
    let mut checked = 0;
    for len in 0..=3 {
        for seq in all_sequences(len) {
            let s = start(TigerState::Playing);
            let joint = open_loop_return_belief(&tiger, &b, &s, &seq).unwrap();
            let mixed = open_loop_return_mixture(&tiger, &b, &s, &seq);
            assert!((joint - mixed).abs() <= 1e-9, "{seq:?}: {joint} vs {mixed}");
            let joint = open_loop_return_belief(&exact, &bx, &s, &seq).unwrap();
            assert_eq!(joint, open_loop_return_mixture(&exact, &bx, &s, &seq), "{seq:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, 1 + 3 + 9 + 27);
}

#[test]
fn open_loop_values_on_tiger() {
    let tiger = make_tiger::<Exact>(Exact::new(19, 20)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = initial_belief(&tiger, &BeliefConfig::default(), &mut rng).unwrap();
    let s = start(TigerState::Playing);
    let v = |seq: &[Action]| open_loop_return_belief(&tiger, &b, &s, seq).unwrap();
    assert_eq!(v(&[OPEN_LEFT]), Exact::new(-45, 1));
    assert_eq!(v(&[LISTEN, OPEN_RIGHT]), Exact::new(-1, 1) + Exact::new(19, 20) * Exact::new(-45, 1));
    assert_eq!(v(&[OPEN_LEFT, LISTEN, LISTEN]), Exact::new(-45, 1));
    assert_eq!(v(&[LISTEN, LISTEN, LISTEN]), Exact::new(-1, 1) - Exact::new(19, 20) - Exact::new(361, 400));
}

#[test]
fn belief_recursion_tracks_moving_hidden_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = initial_belief(&Rotor, &BeliefConfig::default(), &mut rng).unwrap();
    let skew = plite_core::Belief::exact(b.atoms().clone(), vec![0.5, 0.3, 0.2]).unwrap();
    for b in [b, skew] {
        for len in 0..5 {
            let seq = vec![Action(0); len];
            let joint = open_loop_return_belief(&Rotor, &b, &start(0), &seq).unwrap();
            let mixed = open_loop_return_mixture(&Rotor, &b, &start(0), &seq);
            assert!((joint - mixed).abs() <= 1e-12, "{len}: {joint} vs {mixed}");
        }
    }
}
