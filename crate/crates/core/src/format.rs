//! The `.plite` text format for tabular models.
//!
//! ```text
//! file        = header { line } ;
//! header      = "plite" "1" ;
//! line        = [ keyword ":" { token } ] [ comment ] ;
//! keyword     = "discount" | "states" | "params" | "actions" | "observations"
//!             | "prior" | "initial" | "terminal" | "T" | "Z" | "R" ;
//! token       = identifier | number ;
//! identifier  = ( letter | digit | "_" | "-" ) { letter | digit | "_" | "-" } ;
//! number      = [ "-" | "+" ] digits [ "." digits ] [ ( "e" | "E" ) [ "-" | "+" ] digits ] ;
//! comment     = "#" { any character } ;
//! ```
//!
//! Entry rows:
//!
//! ```text
//! T: θ x a x′ p      transition mass
//! Z: θ x′ a o p      observation mass; o may be `null`
//! R: θ x a r         reward
//! ```
//!
//! Declarations appear once each. Row order is free; repeating an entry is
//! an error. An action is legal at a non-terminal state exactly when it has
//! T rows there, and then it must have them for every hidden value. A
//! missing Z row means the null observation with certainty; a missing R
//! row means reward 0. `prior: uniform` is accepted.

use num_traits::{One, Zero};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use crate::error::{PliteError, Result};
use crate::model::{Action, Dist, HiddenSpace, Observation, PomdpLite};
use crate::scalar::{parse_decimal, Scalar};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// What went wrong, independent of where.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormatErrorKind {
    #[error("expected header `plite 1`")]
    MissingHeader,
    #[error("unsupported format version `{0}`")]
    UnsupportedVersion(String),
    #[error("expected `keyword:`")]
    MissingColon,
    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),
    #[error("section `{0}` declared twice")]
    DuplicateSection(String),
    #[error("missing required section `{0}`")]
    MissingSection(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("`{0}` is reserved")]
    ReservedIdentifier(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("`{keyword}` expects {expected} fields, found {found}")]
    Arity {
        keyword: String,
        expected: String,
        found: usize,
    },
    #[error("undeclared {category} `{name}`")]
    Undeclared { category: String, name: String },
    #[error("{category} `{name}` declared twice")]
    DuplicateDeclaration { category: String, name: String },
    #[error("duplicate entry {0}")]
    DuplicateEntry(String),
    #[error("negative probability in {0}")]
    NegativeProbability(String),
    #[error("{row} sums to {total}, expected 1")]
    NotNormalized { row: String, total: String },
    #[error("Θ must be nonempty")]
    EmptyParams,
    #[error("state list must be nonempty")]
    EmptyStates,
    #[error("discount must lie in (0, 1], got {0}")]
    DiscountRange(String),
    #[error("prior has {found} weights for {expected} hidden values")]
    PriorLength { expected: usize, found: usize },
    #[error("{row} has T rows for some hidden values but not for `{missing}`")]
    PartialAction { row: String, missing: String },
    #[error("non-terminal state `{0}` has no legal action")]
    DeadEnd(String),
    #[error("terminal state `{0}` cannot have transitions")]
    TerminalTransition(String),
}

/// A parse or validation failure at a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}:{column}: {kind}")]
pub struct FormatError {
    pub line: usize,
    pub column: usize,
    pub kind: FormatErrorKind,
}

impl FormatError {
    fn at(pos: Pos, kind: FormatErrorKind) -> Self {
        FormatError {
            line: pos.line,
            column: pos.column,
            kind,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

#[derive(Clone, Debug)]
struct Line<'a> {
    keyword: Token<'a>,
    fields: Vec<Token<'a>>,
}

fn is_identifier(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn tokenize(line_no: usize, text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(token(line_no, text, s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(token(line_no, text, s, text.len()));
    }
    out
}

fn token(line_no: usize, text: &str, start: usize, end: usize) -> Token<'_> {
    Token {
        text: &text[start..end],
        pos: Pos {
            line: line_no,
            column: text[..start].chars().count() + 1,
        },
    }
}

/// Splits the text into header-checked keyword lines.
fn lex(text: &str) -> std::result::Result<Vec<Line<'_>>, FormatError> {
    let mut lines = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(line_no, body);
        if tokens.is_empty() {
            continue;
        }
        if !seen_header {
            if tokens[0].text != "plite" {
                return Err(FormatError::at(
                    tokens[0].pos,
                    FormatErrorKind::MissingHeader,
                ));
            }
            match tokens.get(1) {
                Some(v) if v.text == "1" && tokens.len() == 2 => {}
                Some(v) => {
                    return Err(FormatError::at(
                        v.pos,
                        FormatErrorKind::UnsupportedVersion(v.text.to_string()),
                    ))
                }
                None => {
                    return Err(FormatError::at(
                        tokens[0].pos,
                        FormatErrorKind::MissingHeader,
                    ))
                }
            }
            seen_header = true;
            continue;
        }
        let first = &tokens[0];
        let (keyword, rest_of_first) = match first.text.find(':') {
            Some(idx) => (&first.text[..idx], &first.text[idx + 1..]),
            None => match tokens.get(1) {
                Some(t) if t.text.starts_with(':') => (first.text, ""),
                _ => return Err(FormatError::at(first.pos, FormatErrorKind::MissingColon)),
            },
        };
        let mut fields = Vec::new();
        if !rest_of_first.is_empty() {
            let offset = first.text.len() - rest_of_first.len();
            fields.push(Token {
                text: rest_of_first,
                pos: Pos {
                    line: line_no,
                    column: first.pos.column + offset,
                },
            });
        }
        let mut skip_colon = first.text.find(':').is_none();
        for t in &tokens[1..] {
            if skip_colon {
                skip_colon = false;
                let rest = &t.text[1..];
                if !rest.is_empty() {
                    fields.push(Token {
                        text: rest,
                        pos: Pos {
                            line: line_no,
                            column: t.pos.column + 1,
                        },
                    });
                }
                continue;
            }
            fields.push(t.clone());
        }
        lines.push(Line {
            keyword: Token {
                text: keyword,
                pos: first.pos,
            },
            fields,
        });
    }
    if !seen_header {
        return Err(FormatError::at(
            Pos { line: 1, column: 1 },
            FormatErrorKind::MissingHeader,
        ));
    }
    Ok(lines)
}

/// A declared identifier list with name lookup.
#[derive(Clone, Debug, Default)]
struct Names {
    list: Vec<String>,
    index: FxHashMap<String, usize>,
}

impl Names {
    fn declare(
        tokens: &[Token<'_>],
        category: &str,
        reserved: &[&str],
    ) -> std::result::Result<Self, FormatError> {
        let mut names = Names::default();
        for t in tokens {
            if !is_identifier(t.text) {
                return Err(FormatError::at(
                    t.pos,
                    FormatErrorKind::InvalidIdentifier(t.text.into()),
                ));
            }
            if reserved.contains(&t.text) {
                return Err(FormatError::at(
                    t.pos,
                    FormatErrorKind::ReservedIdentifier(t.text.into()),
                ));
            }
            if names.index.contains_key(t.text) {
                return Err(FormatError::at(
                    t.pos,
                    FormatErrorKind::DuplicateDeclaration {
                        category: category.into(),
                        name: t.text.into(),
                    },
                ));
            }
            names.index.insert(t.text.to_string(), names.list.len());
            names.list.push(t.text.to_string());
        }
        Ok(names)
    }

    fn lookup(&self, t: &Token<'_>, category: &str) -> std::result::Result<usize, FormatError> {
        if !is_identifier(t.text) {
            return Err(FormatError::at(
                t.pos,
                FormatErrorKind::InvalidIdentifier(t.text.into()),
            ));
        }
        self.index.get(t.text).copied().ok_or_else(|| {
            FormatError::at(
                t.pos,
                FormatErrorKind::Undeclared {
                    category: category.into(),
                    name: t.text.into(),
                },
            )
        })
    }

    fn len(&self) -> usize {
        self.list.len()
    }
}

fn number<F: Scalar>(t: &Token<'_>) -> std::result::Result<F, FormatError> {
    parse_decimal(t.text)
        .ok_or_else(|| FormatError::at(t.pos, FormatErrorKind::InvalidNumber(t.text.into())))
}

fn arity(line: &Line<'_>, expected: usize) -> std::result::Result<(), FormatError> {
    if line.fields.len() != expected {
        return Err(FormatError::at(
            line.keyword.pos,
            FormatErrorKind::Arity {
                keyword: line.keyword.text.into(),
                expected: expected.to_string(),
                found: line.fields.len(),
            },
        ));
    }
    Ok(())
}

/// A tabular, static-θ model read from `.plite` text. States, hidden
/// values, actions and observations are dense indices into the declared
/// name lists.
#[derive(Clone, Debug)]
pub struct PliteModel<F> {
    discount: F,
    states: Vec<String>,
    params: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    prior: Vec<F>,
    initial: usize,
    terminal: Vec<bool>,
    // Indexed by (θ · |X| + x) · |A| + a.
    transitions: Vec<Option<Dist<usize, F>>>,
    observation_rows: Vec<Option<Dist<Observation, F>>>,
    rewards: Vec<F>,
    legal: Vec<Vec<Action>>,
    theta_ids: Arc<[usize]>,
}

impl<F: Scalar> PliteModel<F> {
    fn slot(&self, theta: usize, x: usize, a: Action) -> usize {
        (theta * self.states.len() + x) * self.actions.len() + a.index()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn prior(&self) -> &[F] {
        &self.prior
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<Action> {
        self.actions
            .iter()
            .position(|s| s == name)
            .map(|i| Action(i as u16))
    }

    pub fn observation_index(&self, name: &str) -> Option<Observation> {
        if name == "null" {
            return Some(Observation::Null);
        }
        self.observations
            .iter()
            .position(|s| s == name)
            .map(|i| Observation::Obs(i as u16))
    }
}

impl<F: Scalar> PomdpLite for PliteModel<F> {
    type Scalar = F;
    type X = usize;
    type Theta = usize;

    fn hidden_space(&self) -> HiddenSpace<usize> {
        HiddenSpace::Enumerated(self.theta_ids.clone())
    }

    fn prior_weight(&self, theta: &usize) -> F {
        self.prior[*theta]
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, w) in self.prior.iter().enumerate() {
            acc += w.to_f64_lossy();
            if u < acc {
                return i;
            }
        }
        self.prior.iter().rposition(|w| *w > F::zero()).unwrap_or(0)
    }

    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn legal_actions_into(&self, x: &usize, out: &mut Vec<Action>) {
        out.clear();
        out.extend_from_slice(&self.legal[*x]);
    }

    fn transition(&self, theta: &usize, x: &usize, a: Action) -> Dist<usize, F> {
        if self.terminal[*x] {
            let mut d = SmallVec::new();
            d.push((*x, F::one()));
            return d;
        }
        self.transitions[self.slot(*theta, *x, a)]
            .clone()
            .unwrap_or_default()
    }

    fn observation(&self, theta: &usize, x_next: &usize, a: Action) -> Dist<Observation, F> {
        match &self.observation_rows[self.slot(*theta, *x_next, a)] {
            Some(row) => row.clone(),
            None => {
                let mut d = SmallVec::new();
                d.push((Observation::Null, F::one()));
                d
            }
        }
    }

    fn reward(&self, theta: &usize, x: &usize, a: Action) -> F {
        if self.terminal[*x] {
            return F::zero();
        }
        self.rewards[self.slot(*theta, *x, a)]
    }

    fn gamma(&self) -> F {
        self.discount
    }

    fn initial_x(&self) -> usize {
        self.initial
    }

    fn is_terminal(&self, x: &usize) -> bool {
        self.terminal[*x]
    }

    fn num_observations(&self) -> usize {
        self.observations.len()
    }

    fn enumerate_states(&self) -> Option<Vec<usize>> {
        Some((0..self.states.len()).collect())
    }

    fn action_name(&self, a: Action) -> String {
        self.actions
            .get(a.index())
            .cloned()
            .unwrap_or_else(|| format!("a{}", a.0))
    }

    fn observation_name(&self, o: Observation) -> String {
        match o {
            Observation::Null => "null".into(),
            Observation::Obs(k) => self
                .observations
                .get(k as usize)
                .cloned()
                .unwrap_or_else(|| format!("o{k}")),
        }
    }

    fn theta_name(&self, theta: &usize) -> String {
        self.params[*theta].clone()
    }

    fn state_name(&self, x: &usize) -> String {
        self.states[*x].clone()
    }
}

const KEYWORDS: &[&str] = &[
    "discount",
    "states",
    "params",
    "actions",
    "observations",
    "prior",
    "initial",
    "terminal",
    "T",
    "Z",
    "R",
];

/// Parses and validates a `.plite` document.
pub fn parse_model<F: Scalar>(text: &str) -> std::result::Result<PliteModel<F>, FormatError> {
    let lines = lex(text)?;
    let mut sections: FxHashMap<&str, &Line<'_>> = FxHashMap::default();
    let mut entries: Vec<&Line<'_>> = Vec::new();
    for line in &lines {
        let kw = line.keyword.text;
        if !KEYWORDS.contains(&kw) {
            return Err(FormatError::at(
                line.keyword.pos,
                FormatErrorKind::UnknownKeyword(kw.into()),
            ));
        }
        if matches!(kw, "T" | "Z" | "R") {
            entries.push(line);
        } else if sections.insert(kw, line).is_some() {
            return Err(FormatError::at(
                line.keyword.pos,
                FormatErrorKind::DuplicateSection(kw.into()),
            ));
        }
    }
    let end = Pos {
        line: text.lines().count().max(1),
        column: 1,
    };
    let required = |name: &str| -> std::result::Result<&Line<'_>, FormatError> {
        sections
            .get(name)
            .copied()
            .ok_or_else(|| FormatError::at(end, FormatErrorKind::MissingSection(name.into())))
    };

    let discount_line = required("discount")?;
    arity(discount_line, 1)?;
    let discount: F = number(&discount_line.fields[0])?;
    if discount <= F::zero() || discount > F::one() {
        return Err(FormatError::at(
            discount_line.fields[0].pos,
            FormatErrorKind::DiscountRange(discount_line.fields[0].text.into()),
        ));
    }

    let states_line = required("states")?;
    let states = Names::declare(&states_line.fields, "state", &[])?;
    if states.len() == 0 {
        return Err(FormatError::at(
            states_line.keyword.pos,
            FormatErrorKind::EmptyStates,
        ));
    }
    let params_line = required("params")?;
    let params = Names::declare(&params_line.fields, "hidden value", &[])?;
    if params.len() == 0 {
        return Err(FormatError::at(
            params_line.keyword.pos,
            FormatErrorKind::EmptyParams,
        ));
    }
    let actions_line = required("actions")?;
    let actions = Names::declare(&actions_line.fields, "action", &[])?;
    let observations = match sections.get("observations") {
        Some(line) => Names::declare(&line.fields, "observation", &["null"])?,
        None => Names::default(),
    };

    let prior_line = required("prior")?;
    let prior: Vec<F> = if prior_line.fields.len() == 1 && prior_line.fields[0].text == "uniform" {
        vec![F::one() / F::from_count(params.len()); params.len()]
    } else {
        if prior_line.fields.len() != params.len() {
            return Err(FormatError::at(
                prior_line.keyword.pos,
                FormatErrorKind::PriorLength {
                    expected: params.len(),
                    found: prior_line.fields.len(),
                },
            ));
        }
        let mut weights = Vec::with_capacity(params.len());
        for t in &prior_line.fields {
            let w: F = number(t)?;
            if w < F::zero() {
                return Err(FormatError::at(
                    t.pos,
                    FormatErrorKind::NegativeProbability("prior".into()),
                ));
            }
            weights.push(w);
        }
        let total: F = weights.iter().copied().sum();
        if !total.approx_eq(F::one(), NORMALIZATION_TOLERANCE) {
            return Err(FormatError::at(
                prior_line.keyword.pos,
                FormatErrorKind::NotNormalized {
                    row: "prior".into(),
                    total: total.to_string(),
                },
            ));
        }
        weights
    };

    let initial_line = required("initial")?;
    arity(initial_line, 1)?;
    let initial = states.lookup(&initial_line.fields[0], "state")?;

    let mut terminal = vec![false; states.len()];
    if let Some(line) = sections.get("terminal") {
        for t in &line.fields {
            terminal[states.lookup(t, "state")?] = true;
        }
    }

    let (ns, na) = (states.len(), actions.len());
    let slots = params.len() * ns * na;
    let slot = |theta: usize, x: usize, a: usize| (theta * ns + x) * na + a;
    let mut t_rows: Vec<Option<(Pos, Dist<usize, F>)>> = vec![None; slots];
    let mut z_rows: Vec<Option<(Pos, Dist<Observation, F>)>> = vec![None; slots];
    let mut rewards = vec![F::zero(); slots];
    let mut reward_seen = vec![false; slots];

    for line in &entries {
        let pos = line.keyword.pos;
        match line.keyword.text {
            "T" => {
                arity(line, 5)?;
                let f = &line.fields;
                let theta = params.lookup(&f[0], "hidden value")?;
                let x = states.lookup(&f[1], "state")?;
                let a = actions.lookup(&f[2], "action")?;
                let x_next = states.lookup(&f[3], "state")?;
                let p: F = number(&f[4])?;
                if terminal[x] {
                    return Err(FormatError::at(
                        pos,
                        FormatErrorKind::TerminalTransition(states.list[x].clone()),
                    ));
                }
                let row = t_rows[slot(theta, x, a)].get_or_insert_with(|| (pos, SmallVec::new()));
                if row.1.iter().any(|(n, _)| *n == x_next) {
                    return Err(FormatError::at(
                        pos,
                        FormatErrorKind::DuplicateEntry(format!(
                            "T({} {} {} {})",
                            f[0].text, f[1].text, f[2].text, f[3].text
                        )),
                    ));
                }
                row.1.push((x_next, p));
            }
            "Z" => {
                arity(line, 5)?;
                let f = &line.fields;
                let theta = params.lookup(&f[0], "hidden value")?;
                let x_next = states.lookup(&f[1], "state")?;
                let a = actions.lookup(&f[2], "action")?;
                let o = if f[3].text == "null" {
                    Observation::Null
                } else {
                    Observation::Obs(observations.lookup(&f[3], "observation")? as u16)
                };
                let p: F = number(&f[4])?;
                let row =
                    z_rows[slot(theta, x_next, a)].get_or_insert_with(|| (pos, SmallVec::new()));
                if row.1.iter().any(|(n, _)| *n == o) {
                    return Err(FormatError::at(
                        pos,
                        FormatErrorKind::DuplicateEntry(format!(
                            "Z({} {} {} {})",
                            f[0].text, f[1].text, f[2].text, f[3].text
                        )),
                    ));
                }
                row.1.push((o, p));
            }
            _ => {
                arity(line, 4)?;
                let f = &line.fields;
                let theta = params.lookup(&f[0], "hidden value")?;
                let x = states.lookup(&f[1], "state")?;
                let a = actions.lookup(&f[2], "action")?;
                let r: F = number(&f[3])?;
                let k = slot(theta, x, a);
                if reward_seen[k] {
                    return Err(FormatError::at(
                        pos,
                        FormatErrorKind::DuplicateEntry(format!(
                            "R({} {} {})",
                            f[0].text, f[1].text, f[2].text
                        )),
                    ));
                }
                reward_seen[k] = true;
                rewards[k] = r;
            }
        }
    }

    let label = |kind: &str, theta: usize, x: usize, a: usize| {
        format!(
            "{kind}({} {} {})",
            params.list[theta], states.list[x], actions.list[a]
        )
    };
    for theta in 0..params.len() {
        for x in 0..ns {
            for a in 0..na {
                let k = slot(theta, x, a);
                if let Some((pos, row)) = &t_rows[k] {
                    check_row(row, *pos, || label("T", theta, x, a))?;
                }
                if let Some((pos, row)) = &z_rows[k] {
                    check_row(row, *pos, || label("Z", theta, x, a))?;
                }
            }
        }
    }

    let mut legal = vec![Vec::new(); ns];
    for x in 0..ns {
        if terminal[x] {
            continue;
        }
        for a in 0..na {
            let defined: Vec<bool> = (0..params.len())
                .map(|t| t_rows[slot(t, x, a)].is_some())
                .collect();
            if defined.iter().all(|d| !d) {
                continue;
            }
            if let Some(missing) = defined.iter().position(|d| !d) {
                let present = defined.iter().position(|d| *d).expect("some row defined");
                let pos = t_rows[slot(present, x, a)].as_ref().expect("defined").0;
                return Err(FormatError::at(
                    pos,
                    FormatErrorKind::PartialAction {
                        row: format!("({} {})", states.list[x], actions.list[a]),
                        missing: params.list[missing].clone(),
                    },
                ));
            }
            legal[x].push(Action(a as u16));
        }
        if legal[x].is_empty() {
            let pos = states_line
                .fields
                .iter()
                .find(|t| t.text == states.list[x])
                .map(|t| t.pos)
                .unwrap_or(states_line.keyword.pos);
            return Err(FormatError::at(
                pos,
                FormatErrorKind::DeadEnd(states.list[x].clone()),
            ));
        }
    }

    Ok(PliteModel {
        discount,
        theta_ids: (0..params.len()).collect::<Vec<_>>().into(),
        states: states.list,
        params: params.list,
        actions: actions.list,
        observations: observations.list,
        prior,
        initial,
        terminal,
        transitions: t_rows.into_iter().map(|r| r.map(|(_, d)| d)).collect(),
        observation_rows: z_rows.into_iter().map(|r| r.map(|(_, d)| d)).collect(),
        rewards,
        legal,
    })
}

fn check_row<T, F: Scalar>(
    row: &Dist<T, F>,
    pos: Pos,
    label: impl Fn() -> String,
) -> std::result::Result<(), FormatError> {
    if row.iter().any(|(_, p)| *p < F::zero()) {
        return Err(FormatError::at(
            pos,
            FormatErrorKind::NegativeProbability(label()),
        ));
    }
    let total: F = row.iter().map(|(_, p)| *p).sum();
    if !total.approx_eq(F::one(), NORMALIZATION_TOLERANCE) {
        return Err(FormatError::at(
            pos,
            FormatErrorKind::NotNormalized {
                row: label(),
                total: total.to_string(),
            },
        ));
    }
    Ok(())
}

/// Identifier-safe, collision-free names.
fn sanitize_names(raw: impl Iterator<Item = String>, reserved: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (i, name) in raw.enumerate() {
        let mut clean: String = name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        if clean.is_empty() || reserved.contains(&clean.as_str()) {
            clean = format!("{clean}_{i}");
        }
        while out.contains(&clean) {
            clean = format!("{clean}_{i}");
        }
        out.push(clean);
    }
    out
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plain = format!("{}", self.0);
        if parse_decimal::<f64>(&plain) == Some(self.0) {
            f.write_str(&plain)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Writes a tabular model as `.plite` text.
pub fn serialize_model<M: PomdpLite>(model: &M) -> Result<String> {
    use fmt::Write as _;
    let thetas = match model.hidden_space() {
        HiddenSpace::Enumerated(values) => values,
        HiddenSpace::Generative { .. } => {
            return Err(PliteError::Unsupported(
                "cannot serialize a generative hidden space".into(),
            ))
        }
    };
    if !model.is_static() {
        return Err(PliteError::Unsupported(
            "the text format has no hidden dynamics".into(),
        ));
    }
    let states = model
        .enumerate_states()
        .ok_or_else(|| PliteError::Unsupported("model does not enumerate its states".into()))?;
    let state_index: FxHashMap<&M::X, usize> =
        states.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let state_names = sanitize_names(states.iter().map(|x| model.state_name(x)), &[]);
    let theta_names = sanitize_names(thetas.iter().map(|t| model.theta_name(t)), &[]);
    let action_names = sanitize_names(
        (0..model.num_actions()).map(|a| model.action_name(Action(a as u16))),
        &[],
    );
    let obs_names = sanitize_names(
        (0..model.num_observations()).map(|k| model.observation_name(Observation::Obs(k as u16))),
        &["null"],
    );
    let obs_name = |o: Observation| -> Result<&str> {
        match o {
            Observation::Null => Ok("null"),
            Observation::Obs(k) => obs_names
                .get(k as usize)
                .map(|s| s.as_str())
                .ok_or_else(|| PliteError::Argument(format!("observation {k} out of range"))),
        }
    };
    let find = |x: &M::X| -> Result<usize> {
        state_index.get(x).copied().ok_or_else(|| {
            PliteError::Argument(format!("state {} is not enumerated", model.state_name(x)))
        })
    };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "plite 1");
    let _ = writeln!(w, "discount: {}", Num(model.gamma().to_f64_lossy()));
    let _ = writeln!(w, "states: {}", state_names.join(" "));
    let _ = writeln!(w, "params: {}", theta_names.join(" "));
    let _ = writeln!(w, "actions: {}", action_names.join(" "));
    let _ = writeln!(w, "observations: {}", obs_names.join(" "));
    let prior: Vec<String> = thetas
        .iter()
        .map(|t| Num(model.prior_weight(t).to_f64_lossy()).to_string())
        .collect();
    let _ = writeln!(w, "prior: {}", prior.join(" "));
    let _ = writeln!(w, "initial: {}", state_names[find(&model.initial_x())?]);
    let terminal: Vec<&str> = states
        .iter()
        .enumerate()
        .filter(|(_, x)| model.is_terminal(x))
        .map(|(i, _)| state_names[i].as_str())
        .collect();
    let _ = writeln!(w, "terminal: {}", terminal.join(" "));

    let mut z_written: FxHashMap<(usize, usize, u16), ()> = FxHashMap::default();
    for (ti, theta) in thetas.iter().enumerate() {
        for (xi, x) in states.iter().enumerate() {
            if model.is_terminal(x) {
                continue;
            }
            for a in model.legal_actions(x) {
                let an = &action_names[a.index()];
                let r = model.reward(theta, x, a).to_f64_lossy();
                if r != 0.0 {
                    let _ = writeln!(
                        w,
                        "R: {} {} {} {}",
                        theta_names[ti],
                        state_names[xi],
                        an,
                        Num(r)
                    );
                }
                for (x_next, p) in model.transition(theta, x, a) {
                    if p == M::Scalar::zero() {
                        continue;
                    }
                    let ni = find(&x_next)?;
                    let _ = writeln!(
                        w,
                        "T: {} {} {} {} {}",
                        theta_names[ti],
                        state_names[xi],
                        an,
                        state_names[ni],
                        Num(p.to_f64_lossy())
                    );
                    if z_written.insert((ti, ni, a.0), ()).is_some() {
                        continue;
                    }
                    let z = model.observation(theta, &x_next, a);
                    let trivial =
                        z.len() == 1 && z[0].0 == Observation::Null && z[0].1 == M::Scalar::one();
                    if trivial {
                        continue;
                    }
                    for (o, q) in z {
                        if q == M::Scalar::zero() {
                            continue;
                        }
                        let _ = writeln!(
                            w,
                            "Z: {} {} {} {} {}",
                            theta_names[ti],
                            state_names[ni],
                            an,
                            obs_name(o)?,
                            Num(q.to_f64_lossy())
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}
