use std::path::PathBuf;

use plite_core::domains::{make_deterministic_chain, make_tiger};
use plite_core::model::augmented_transition as augmented_state_dists;
use plite_core::{
    parse_model, serialize_model, Action, AugmentedState, FormatErrorKind,
    HiddenSpace, Observation, PliteModel, PomdpLite,
};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn kind_name(kind: &FormatErrorKind) -> &'static str {
    use FormatErrorKind::*;
    match kind {
        MissingHeader => "missing_header",
        UnsupportedVersion(_) => "unsupported_version",
        MissingColon => "missing_colon",
        UnknownKeyword(_) => "unknown_keyword",
        DuplicateSection(_) => "duplicate_section",
        MissingSection(_) => "missing_section",
        InvalidIdentifier(_) => "invalid_identifier",
        ReservedIdentifier(_) => "reserved_identifier",
        InvalidNumber(_) => "invalid_number",
        Arity { .. } => "arity",
        Undeclared { .. } => "undeclared",
        DuplicateDeclaration { .. } => "duplicate_declaration",
        DuplicateEntry(_) => "duplicate_entry",
        NegativeProbability(_) => "negative_probability",
        NotNormalized { .. } => "not_normalized",
        EmptyParams => "empty_params",
        EmptyStates => "empty_states",
        DiscountRange(_) => "discount_range",
        PriorLength { .. } => "prior_length",
        PartialAction { .. } => "partial_action",
        DeadEnd(_) => "dead_end",
        TerminalTransition(_) => "terminal_transition",
    }
}

#[test]
fn every_invalid_fixture_triggers_its_own_diagnostic() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/invalid");
    let mut seen = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let expected = path.file_stem().unwrap().to_str().unwrap().to_string();
        let text = std::fs::read_to_string(&path).unwrap();
        let err = parse_model::<f64>(&text).expect_err(&expected);
        assert_eq!(kind_name(&err.kind), expected, "{}: {err}", path.display());
        assert!(err.line >= 1 && err.column >= 1, "{expected}: no position");
        seen.push(expected);
    }
    seen.sort();
    seen.dedup();
    assert!(seen.len() >= 10, "only {} distinct diagnostics", seen.len());
}

#[test]
fn not_normalized_names_the_row() {
    let text = fixture("tiger.plite").replace("T: L playing LS playing 1", "T: L playing LS playing 0.9");
    let err = parse_model::<f64>(&text).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err.kind, FormatErrorKind::NotNormalized { .. }));
    assert!(msg.contains('L') && msg.contains("playing") && msg.contains("LS"), "{msg}");
}

#[test]
fn empty_params_message() {
    let text = fixture("tiger.plite").replace("params: L R", "params:");
    let err = parse_model::<f64>(&text).unwrap_err();
    assert_eq!(err.kind, FormatErrorKind::EmptyParams);
    assert!(err.to_string().contains("Θ must be nonempty"));
}

#[test]
fn tiger_fixture_matches_constructor() {
    let parsed: PliteModel<f64> = parse_model(&fixture("tiger.plite")).unwrap();
    let built = make_tiger::<f64>(0.95).unwrap();
    assert_eq!(parsed.params().len(), 2);
    assert_eq!(parsed.num_actions(), 3);
    assert_eq!(parsed.gamma(), built.gamma());
    let HiddenSpace::Enumerated(sides) = built.hidden_space() else {
        panic!()
    };
    let playing = parsed.state_index("playing").unwrap();
    for (i, side) in sides.iter().enumerate() {
        let name = built.theta_name(side);
        let t = parsed.param_index(&name).unwrap();
        assert_eq!(parsed.prior_weight(&t), built.prior_weight(side), "prior {i}");
        for a in 0..3u16 {
            let a = Action(a);
            let pa = parsed.action_index(&built.action_name(a)).unwrap();
            assert_eq!(
                parsed.reward(&t, &playing, pa),
                built.reward(side, &built.initial_x(), a)
            );
            let ours = augmented_state_dists(&parsed, &t, &playing, pa)
                .into_iter()
                .map(|(s, p)| (parsed.states()[s.x].clone(), parsed.observation_name(s.obs), p))
                .collect::<Vec<_>>();
            let mut ours = ours;
            ours.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            let theirs = augmented_state_dists(&built, side, &built.initial_x(), a)
                .into_iter()
                .map(|(s, p)| (built.state_name(&s.x), built.observation_name(s.obs), p))
                .collect::<Vec<_>>();
            let mut theirs = theirs;
            theirs.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            assert_eq!(ours, theirs, "θ={name} a={}", built.action_name(a));
        }
    }
}

fn assert_same_model(a: &PliteModel<f64>, b: &PliteModel<f64>) {
    assert_eq!(a.states(), b.states());
    assert_eq!(a.params(), b.params());
    assert_eq!(a.actions(), b.actions());
    assert_eq!(a.observations(), b.observations());
    assert_eq!(a.prior(), b.prior());
    assert_eq!(a.gamma(), b.gamma());
    assert_eq!(a.initial_x(), b.initial_x());
    for x in 0..a.states().len() {
        assert_eq!(a.is_terminal(&x), b.is_terminal(&x));
        assert_eq!(a.legal_actions(&x), b.legal_actions(&x));
        for t in 0..a.params().len() {
            for act in a.legal_actions(&x) {
                assert!((a.reward(&t, &x, act) - b.reward(&t, &x, act)).abs() <= 1e-12);
                let da = augmented_state_dists(a, &t, &x, act);
                let db = augmented_state_dists(b, &t, &x, act);
                assert_eq!(da.len(), db.len());
                for ((sa, pa), (sb, pb)) in da.iter().zip(db.iter()) {
                    assert_eq!(sa, sb);
                    assert!((pa - pb).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn corpus_round_trips() {
    for name in ["tiger.plite", "twostep.plite"] {
        let first: PliteModel<f64> = parse_model(&fixture(name)).unwrap();
        let text = serialize_model(&first).unwrap();
        let second: PliteModel<f64> = parse_model(&text).unwrap();
        assert_same_model(&first, &second);
        assert_eq!(serialize_model(&second).unwrap(), text, "{name}");
    }
}

#[test]
fn chain_serializes_to_probability_one_rows() {
    let chain = make_deterministic_chain::<f64>(3, 4).unwrap();
    let text = serialize_model(&chain).unwrap();
    for line in text.lines().filter(|l| l.starts_with("T:")) {
        assert_eq!(line.split_whitespace().last(), Some("1"), "{line}");
    }
    let parsed: PliteModel<f64> = parse_model(&text).unwrap();
    for t in 0..3 {
        for x in 0..3 {
            for a in [Action(0), Action(1)] {
                let next = parsed.transition(&t, &x, a);
                assert_eq!(next.len(), 1);
                assert_eq!(parsed.states()[next[0].0], chain.state_name(&chain.successor(t, x, a)));
            }
        }
    }
}

#[test]
fn generative_models_are_not_serializable() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let bs = plite_core::domains::make_battleship::<f64, _>(5, 2, &mut rng).unwrap();
    assert!(serialize_model(&bs).is_err());
}

/// A random tabular model written directly in the text format.
fn random_model_text(seed: &[u32], states: usize, params: usize) -> String {
    let mut it = seed.iter().cycle().copied();
    let mut next = move || it.next().unwrap() % 1000 + 1;
    let actions = 2;
    let mut out = String::from("plite 1\ndiscount: 0.9\n");
    out += &format!(
        "states: {}\n",
        (0..states).map(|i| format!("s{i}")).collect::<Vec<_>>().join(" ")
    );
    out += &format!(
        "params: {}\n",
        (0..params).map(|i| format!("p{i}")).collect::<Vec<_>>().join(" ")
    );
    out += "actions: a0 a1\nobservations: o0 o1\n";
    let w: Vec<u32> = (0..params).map(|_| next()).collect();
    let total: u32 = w.iter().sum();
    let mut prior: Vec<String> = Vec::new();
    let mut used = 0.0;
    for (i, wi) in w.iter().enumerate() {
        if i + 1 == params {
            prior.push(format!("{}", round6(1.0 - used)));
        } else {
            let p = round6(*wi as f64 / total as f64);
            used += p;
            prior.push(format!("{p}"));
        }
    }
    out += &format!("prior: {}\ninitial: s0\nterminal: s{}\n", prior.join(" "), states - 1);
    for t in 0..params {
        for x in 0..states - 1 {
            for a in 0..actions {
                for (j, p) in split(&mut next, states).into_iter().enumerate() {
                    if p > 0.0 {
                        out += &format!("T: p{t} s{x} a{a} s{j} {p}\n");
                    }
                }
                out += &format!("R: p{t} s{x} a{a} {}\n", next() as i64 - 500);
            }
        }
        for x in 0..states {
            for a in 0..actions {
                if next() % 3 == 0 {
                    continue;
                }
                for (o, p) in split(&mut next, 2).into_iter().enumerate() {
                    if p > 0.0 {
                        out += &format!("Z: p{t} s{x} a{a} o{o} {p}\n");
                    }
                }
            }
        }
    }
    out
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn split(next: &mut impl FnMut() -> u32, k: usize) -> Vec<f64> {
    let w: Vec<u32> = (0..k).map(|_| next() % 4).collect();
    let total: u32 = w.iter().sum();
    if total == 0 {
        let mut v = vec![0.0; k];
        v[0] = 1.0;
        return v;
    }
    let mut v: Vec<f64> = w.iter().map(|&x| round6(x as f64 / total as f64)).collect();
    let top = (0..k).max_by_key(|&i| w[i]).unwrap();
    let rest: f64 = (0..k).filter(|&i| i != top).map(|i| v[i]).sum();
    v[top] = round6(1.0 - rest);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_five_state_three_param_models_round_trip(seed in prop::collection::vec(any::<u32>(), 32)) {
        let text = random_model_text(&seed, 5, 3);
        let first: PliteModel<f64> = parse_model(&text).unwrap();
        let again: PliteModel<f64> = parse_model(&serialize_model(&first).unwrap()).unwrap();
        assert_same_model(&first, &again);
    }

    #[test]
    fn null_is_the_default_observation(seed in prop::collection::vec(any::<u32>(), 32)) {
        let text = random_model_text(&seed, 4, 2);
        let m: PliteModel<f64> = parse_model(&text).unwrap();
        for t in 0..2 {
            for x in 0..4 {
                for a in [Action(0), Action(1)] {
                    let z = m.observation(&t, &x, a);
                    let total: f64 = z.iter().map(|(_, p)| p).sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                    if z.iter().any(|(o, _)| *o == Observation::Null) {
                        prop_assert_eq!(z.len(), 1);
                    }
                }
            }
        }
        let _ = AugmentedState::start(m.initial_x());
    }
}
