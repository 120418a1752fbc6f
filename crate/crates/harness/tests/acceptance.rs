//! Acceptance criteria. Each test prints one `ACn PASS|FAIL` line before
//! asserting. The RockSample and Battleship runs take tens of minutes on a
//! single core and are ignored by default:
//!
//! ```text
//! cargo test --release -p plite-harness --test acceptance -- --ignored --nocapture
//! ```

use std::sync::Arc;
use std::time::Instant;

use plite_core::domains::tiger::{LISTEN, OPEN_LEFT};
use plite_core::domains::{
    make_battleship, make_deterministic_chain, make_rocksample, make_standard_rocksample, make_tiger, TigerSide,
    TigerState,
};
use plite_core::planners::DEFAULT_NODE_CAP;
use plite_core::theory::{
    default_kappa, dirichlet_bonus_exact, dirichlet_bound, open_loop_return_belief, open_loop_return_mixture,
    sample_complexity_experiment, DirichletCounts,
};
use plite_core::{
    bayes_optimal_oracle, initial_belief, parse_model, reward_bonus, sample_step, serialize_model, solve_internal_vi,
    track_update, Action, AugmentedState, Belief, BeliefConfig, BeliefKind, Budget, Exact, PlannerConfig,
    PliteModel, PomdpLite, QmdpSolution, Scalar,
};
use plite_core::baselines::QMDP_TOLERANCE;
use plite_harness::{run_episodes, tune_beta, PlannerKind, RunConfig, RunSummary, BETA_GRID};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: String) {
    println!("\n{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id}: {detail}");
}

fn playing() -> AugmentedState<TigerState> {
    AugmentedState::start(TigerState::Playing)
}

fn sequences(max_len: usize) -> Vec<Vec<Action>> {
    let mut all = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|p: &Vec<Action>| {
                (0..3u16).map(move |a| {
                    let mut q = p.clone();
                    q.push(Action(a));
                    q
                })
            })
            .collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

#[test]
fn ac1_belief_recursion_equals_the_indexed_mixture() {
    let started = Instant::now();
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = initial_belief(&tiger, &BeliefConfig::default(), &mut rng).unwrap();
    let mut worst = 0.0f64;
    let seqs = sequences(3);
    for seq in &seqs {
        let lhs = open_loop_return_belief(&tiger, &b, &playing(), seq).unwrap();
        let rhs = open_loop_return_mixture(&tiger, &b, &playing(), seq);
        worst = worst.max((lhs - rhs).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "AC1",
        seqs.len() == 40 && worst <= 1e-9 && secs < 1.0,
        format!("sequences={} max_diff={worst:.3e} runtime={secs:.3}s", seqs.len()),
    );
}

#[test]
fn ac2_dirichlet_closed_form() {
    let started = Instant::now();
    let counts = |v: &[usize]| DirichletCounts::new(v.iter().map(|&c| Exact::from_count(c)).collect()).unwrap();
    let one = Exact::from_count(1);
    let small = dirichlet_bonus_exact(&counts(&[1, 1]), one);
    let large = dirichlet_bonus_exact(&counts(&[10, 10]), one);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=8);
        let v: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=50)).collect();
        let c = counts(&v);
        let beta = Exact::ratio(rng.gen_range(1..=20), 4);
        if dirichlet_bonus_exact(&c, beta) > dirichlet_bound(&c, beta) {
            violations += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "AC2",
        small == Exact::ratio(1, 3) && large == Exact::ratio(1, 21) && violations == 0 && secs < 1.0,
        format!("bonus(1,1)={small} bonus(10,10)={large} bound_violations={violations}/1000 runtime={secs:.3}s"),
    );
}

#[test]
fn ac3_chain_pairs_are_learned_in_one_visit() {
    let started = Instant::now();
    let mut max_zeta = 0;
    let mut late_bonus = 0.0f64;
    let mut pairs = 0;
    for (variants, length) in [(2, 4), (4, 6), (8, 8)] {
        let chain = make_deterministic_chain::<f64>(variants, length).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(variants as u64);
        let prior = initial_belief(&chain, &BeliefConfig::default(), &mut rng).unwrap();
        let report =
            sample_complexity_experiment(&chain, &prior, 1.0, default_kappa(chain.gamma()), 2000, false, &mut rng)
                .unwrap();
        max_zeta = max_zeta.max(report.max_zeta());
        pairs += report.tracker.visited_count();
        for row in report.tracker.rows.iter().filter(|r| r.visit >= 2) {
            late_bonus = late_bonus.max(row.bonus);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "AC3",
        late_bonus == 0.0 && max_zeta <= 1 && secs < 1.0,
        format!("pairs={pairs} max_bonus_after_first_visit={late_bonus} max_zeta={max_zeta} runtime={secs:.3}s"),
    );
}

#[test]
fn ac4_tiger_agent_is_near_the_oracle() {
    let started = Instant::now();
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = initial_belief(&tiger, &BeliefConfig::default(), &mut rng).unwrap();
    let oracle = bayes_optimal_oracle(&tiger, &b, &playing(), 10, DEFAULT_NODE_CAP).unwrap().value;

    let pilot = RunConfig::new(PlannerKind::PomdpLiteVi, PlannerConfig::default(), 2000, 404);
    let (beta, _) = tune_beta(&tiger, "tiger", 100, &BETA_GRID, &pilot).unwrap();
    let cfg = RunConfig::new(PlannerKind::PomdpLiteVi, PlannerConfig::default().with_beta(beta), 10_000, 4);
    let s = run_episodes(&tiger, "tiger", 100, &cfg).unwrap().summary;
    let secs = started.elapsed().as_secs_f64();
    let gap = (s.mean_return - oracle).abs();
    report(
        "AC4",
        gap <= 0.5 && s.failures == 0 && secs < 60.0,
        format!(
            "oracle_h10={oracle:.5} beta={beta} mean={:.4} stderr={:.4} gap={gap:.4} episodes={} runtime={secs:.1}s",
            s.mean_return, s.stderr, s.episodes
        ),
    );
}

#[test]
fn ac5_mean_mdp_listens_forever() {
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let b = Belief::exact(vec![TigerSide::Left, TigerSide::Right].into(), vec![0.5, 0.5]).unwrap();
    let table = solve_internal_vi(&tiger, &b, &playing(), &PlannerConfig::default().with_beta(0.0)).unwrap();
    let v = table.v(&playing()).unwrap();
    let open = table.q(&playing(), OPEN_LEFT).unwrap();
    let greedy = table.greedy(&playing());
    report(
        "AC5",
        greedy == Some(LISTEN) && (v + 20.0).abs() <= 1e-6 && v > open,
        format!("greedy={:?} value={v:.9} open={open}", greedy.map(|a| tiger.action_name(a))),
    );
}

fn random_tiger_belief(rng: &mut ChaCha8Rng) -> Belief<TigerSide, f64> {
    let p: f64 = rng.gen();
    Belief::exact(vec![TigerSide::Left, TigerSide::Right].into(), vec![p, 1.0 - p]).unwrap()
}

#[test]
fn ac9_qmdp_is_optimistic() {
    let started = Instant::now();
    let tiger = make_tiger::<f64>(0.95).unwrap();
    let q = QmdpSolution::solve(&tiger, &[playing()], QMDP_TOLERANCE, 100_000, 1 << 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let b = random_tiger_belief(&mut rng);
        let oracle = bayes_optimal_oracle(&tiger, &b, &playing(), 12, DEFAULT_NODE_CAP).unwrap().value;
        worst = worst.min(q.value(&b, &playing()).unwrap() - oracle);
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "AC9",
        worst >= -1e-6 && secs < 10.0,
        format!("beliefs=100 min(qmdp-oracle_h12)={worst:.6} runtime={secs:.2}s"),
    );
}

fn normalization_walk<M: PomdpLite>(model: &M, updates: usize, cfg: &BeliefConfig, rng: &mut ChaCha8Rng) -> f64 {
    let prior = initial_belief(model, cfg, rng).unwrap();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < updates {
        let mut theta = model.sample_prior(rng);
        let mut b = prior.clone();
        let mut s = AugmentedState::start(model.initial_x());
        while !model.is_terminal(&s.x) && done < updates {
            let a = model.random_legal_action(&s.x, rng).unwrap();
            let out = sample_step(model, &theta, &s, a, rng).unwrap();
            b = track_update(model, &b, &s, a, &out.next, cfg, rng).unwrap();
            let total: f64 = b.weights().iter().map(|w| w.to_f64_lossy()).sum();
            let negative = b.weights().iter().any(|w| w.to_f64_lossy() < 0.0);
            worst = worst.max(if negative { f64::INFINITY } else { (total - 1.0).abs() });
            s = out.next;
            theta = out.theta_next;
            done += 1;
        }
    }
    worst
}

fn random_belief<T: Clone + PartialEq>(rng: &mut ChaCha8Rng, atoms: Arc<[T]>) -> Belief<T, f64> {
    let mut w: Vec<f64> = (0..atoms.len()).map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen() }).collect();
    if w.iter().all(|v| *v == 0.0) {
        w[0] = 1.0;
    }
    Belief::from_unnormalized(BeliefKind::Exact, atoms, w).unwrap()
}

fn corpus() -> Vec<(String, String)> {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    let mut out: Vec<(String, String)> = ["tiger.plite", "twostep.plite"]
        .iter()
        .map(|name| (name.to_string(), std::fs::read_to_string(dir.join(name)).unwrap()))
        .collect();
    out.push(("tiger(0.95)".into(), serialize_model(&make_tiger::<f64>(0.95).unwrap()).unwrap()));
    out.push(("chain(4,6)".into(), serialize_model(&make_deterministic_chain::<f64>(4, 6).unwrap()).unwrap()));
    out.push(("rocksample(3,2)".into(), serialize_model(&make_rocksample::<f64>(3, 2, 0).unwrap()).unwrap()));
    out
}

#[test]
fn ac10_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = BeliefConfig::default();
    let mut norm = 0.0f64;
    norm = norm.max(normalization_walk(&make_tiger::<f64>(0.95).unwrap(), 25_000, &cfg, &mut rng));
    norm = norm.max(normalization_walk(&make_rocksample::<f64>(5, 4, 1).unwrap(), 25_000, &cfg, &mut rng));
    norm = norm.max(normalization_walk(&make_deterministic_chain::<f64>(6, 5).unwrap(), 25_000, &cfg, &mut rng));
    let twostep: PliteModel<f64> = parse_model(&corpus()[1].1).unwrap();
    norm = norm.max(normalization_walk(&twostep, 15_000, &cfg, &mut rng));
    let bs = make_battleship::<f64, _>(5, 2, &mut rng).unwrap();
    norm = norm.max(normalization_walk(&bs, 10_000, &BeliefConfig { particles: 300, ..cfg.clone() }, &mut rng));
    let normalized = norm <= 1e-9;

    let tiger = make_tiger::<f64>(0.95).unwrap();
    let rs = make_rocksample::<f64>(5, 3, 4).unwrap();
    let rs_states: Vec<_> = rs.enumerate_states().unwrap().into_iter().filter(|x| !rs.is_terminal(x)).collect();
    let mut bonus_violations = 0;
    for i in 0..100_000 {
        let beta = rng.gen_range(0.0..10.0);
        let bonus = if i % 2 == 0 {
            let b = random_belief(&mut rng, vec![TigerSide::Left, TigerSide::Right].into());
            reward_bonus(&tiger, &b, &playing(), Action(rng.gen_range(0..3)), beta)
        } else {
            let b = random_belief(&mut rng, (0..8u32).collect::<Vec<_>>().into());
            let x = rs_states[rng.gen_range(0..rs_states.len())];
            let legal = rs.legal_actions(&x);
            reward_bonus(&rs, &b, &AugmentedState::start(x), legal[rng.gen_range(0..legal.len())], beta)
        };
        if !(0.0..=2.0 * beta + 1e-12).contains(&bonus) {
            bonus_violations += 1;
        }
    }

    let mut round_trip_failures = Vec::new();
    for (name, text) in corpus() {
        let first: PliteModel<f64> = parse_model(&text).unwrap();
        let again = serialize_model(&first).unwrap();
        let second: PliteModel<f64> = parse_model(&again).unwrap();
        if serialize_model(&second).unwrap() != again || first.states() != second.states() {
            round_trip_failures.push(name);
        }
    }

    let reproducible = {
        let rs = make_rocksample::<f64>(5, 3, 2).unwrap();
        let cfg = RunConfig::new(
            PlannerKind::PomdpLite,
            PlannerConfig::default().with_budget(Budget::Simulations(1000)),
            4,
            77,
        );
        let strip = |s: RunSummary| RunSummary { total_wall_ms: 0.0, ..s };
        let a = run_episodes(&rs, "rs", 60, &cfg).unwrap();
        let b = run_episodes(&rs, "rs", 60, &cfg).unwrap();
        let bits = |o: &plite_harness::RunOutput| {
            o.rows.iter().map(|r| (r.seed, r.steps, r.discounted_return.to_bits())).collect::<Vec<_>>()
        };
        bits(&a) == bits(&b) && strip(a.summary) == strip(b.summary)
    };

    report(
        "AC10",
        normalized && bonus_violations == 0 && round_trip_failures.is_empty() && reproducible,
        format!(
            "updates=100000 max_norm_err={norm:.2e} bonus_draws=100000 violations={bonus_violations} corpus={} round_trip_failures={round_trip_failures:?} reproducible={reproducible}",
            corpus().len()
        ),
    );
}

fn uct_config(beta: f64) -> PlannerConfig {
    PlannerConfig::default()
        .with_beta(beta)
        .with_budget(Budget::Simulations(10_000))
}

/// β for the RockSample and Battleship runs, chosen from the grid on
/// separate pilot seeds.
const LARGE_DOMAIN_BETA: f64 = 0.5;

fn pair<M: PomdpLite + 'static>(model: &M, name: &str, max_steps: usize, seed: u64) -> (RunSummary, RunSummary) {
    let pl = RunConfig::new(PlannerKind::PomdpLite, uct_config(LARGE_DOMAIN_BETA), 100, seed);
    let mm = RunConfig::new(PlannerKind::MeanMdp, uct_config(LARGE_DOMAIN_BETA), 100, seed);
    (
        run_episodes(model, name, max_steps, &pl).unwrap().summary,
        run_episodes(model, name, max_steps, &mm).unwrap().summary,
    )
}

fn describe(pl: &RunSummary, mm: &RunSummary, secs: f64) -> String {
    format!(
        "pomdplite={:.3}±{:.3} meanmdp={:.3}±{:.3} gap={:.3} episodes={} sims=10000 beta={} runtime={:.0}s",
        pl.mean_return,
        pl.stderr,
        mm.mean_return,
        mm.stderr,
        pl.mean_return - mm.mean_return,
        pl.episodes,
        pl.beta,
        secs
    )
}

fn separated(pl: &RunSummary, mm: &RunSummary) -> bool {
    pl.mean_return - 2.0 * pl.stderr > mm.mean_return + 2.0 * mm.stderr
}

#[test]
#[ignore = "about 15 minutes on one core"]
fn ac6_rocksample_7_8() {
    let started = Instant::now();
    let rs = make_standard_rocksample::<f64>(7, 8).unwrap();
    let (pl, mm) = pair(&rs, "rocksample(7,8)", 200, 6000);
    let pass = pl.mean_return >= 18.0 && pl.mean_return - mm.mean_return >= 2.0 && separated(&pl, &mm);
    report("AC6", pass, describe(&pl, &mm, started.elapsed().as_secs_f64()));
}

#[test]
#[ignore = "about 45 minutes on one core"]
fn ac7_rocksample_11_11() {
    let started = Instant::now();
    let rs = make_standard_rocksample::<f64>(11, 11).unwrap();
    let (pl, mm) = pair(&rs, "rocksample(11,11)", 200, 7000);
    let pass = pl.mean_return - mm.mean_return >= 5.0;
    report("AC7", pass, describe(&pl, &mm, started.elapsed().as_secs_f64()));
}

#[test]
#[ignore = "about 30 minutes on one core"]
fn ac8_battleship_10_5() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let bs = make_battleship::<f64, _>(10, 5, &mut rng).unwrap();
    let (pl, mm) = pair(&bs, "battleship(10,5)", 100, 8000);
    report("AC8", pl.mean_return >= 55.0, describe(&pl, &mm, started.elapsed().as_secs_f64()));
}
