//! Modal logic S5 through a translation into the set language.
//!
//! Worlds are individuals, each modal subformula gets a set variable holding
//! the worlds where it is true, and the formula is satisfiable iff the
//! translation, asserted at a world `x`, is. The translation lies in the
//! bounded-cardinality fragment with `h = 3`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::decider::hfrag::{fewer_than, small_sets_axiom, subordination_axiom, universe_axiom};
use crate::decider::{decide_sat, decide_sat_h, DecideError, DecideOptions, Status, Verdict};
use crate::elemset::{subsets_below, ElemSet};
use crate::formulas::{Formula, Var};
use crate::semantics::Interpretation;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Modal {
    Letter(String),
    Not(Box<Modal>),
    And(Box<Modal>, Box<Modal>),
    Or(Box<Modal>, Box<Modal>),
    Implies(Box<Modal>, Box<Modal>),
    Necessarily(Box<Modal>),
    Possibly(Box<Modal>),
}

impl Modal {
    pub fn letter(p: &str) -> Modal {
        Modal::Letter(p.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Modal) -> Modal {
        Modal::Not(Box::new(a))
    }

    pub fn and(a: Modal, b: Modal) -> Modal {
        Modal::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Modal, b: Modal) -> Modal {
        Modal::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Modal, b: Modal) -> Modal {
        Modal::Implies(Box::new(a), Box::new(b))
    }

    pub fn necessarily(a: Modal) -> Modal {
        Modal::Necessarily(Box::new(a))
    }

    pub fn possibly(a: Modal) -> Modal {
        Modal::Possibly(Box::new(a))
    }

    /// Number of connectives and modal operators.
    pub fn connectives(&self) -> usize {
        match self {
            Modal::Letter(_) => 0,
            Modal::Not(a) | Modal::Necessarily(a) | Modal::Possibly(a) => 1 + a.connectives(),
            Modal::And(a, b) | Modal::Or(a, b) | Modal::Implies(a, b) => 1 + a.connectives() + b.connectives(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Modal::Letter(_) => 0,
            Modal::Not(a) | Modal::Necessarily(a) | Modal::Possibly(a) => 1 + a.depth(),
            Modal::And(a, b) | Modal::Or(a, b) | Modal::Implies(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn letters(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn go(m: &Modal, out: &mut Vec<String>) {
            match m {
                Modal::Letter(p) => {
                    if !out.contains(p) {
                        out.push(p.clone())
                    }
                }
                Modal::Not(a) | Modal::Necessarily(a) | Modal::Possibly(a) => go(a, out),
                Modal::And(a, b) | Modal::Or(a, b) | Modal::Implies(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        go(self, &mut out);
        out.sort();
        out
    }

    /// Rewrites `a -> b` as `~a | b`.
    pub fn without_implication(&self) -> Modal {
        match self {
            Modal::Letter(_) => self.clone(),
            Modal::Not(a) => Modal::not(a.without_implication()),
            Modal::Necessarily(a) => Modal::necessarily(a.without_implication()),
            Modal::Possibly(a) => Modal::possibly(a.without_implication()),
            Modal::And(a, b) => Modal::and(a.without_implication(), b.without_implication()),
            Modal::Or(a, b) => Modal::or(a.without_implication(), b.without_implication()),
            Modal::Implies(a, b) => Modal::or(Modal::not(a.without_implication()), b.without_implication()),
        }
    }
}

impl fmt::Display for Modal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modal::Letter(p) => write!(f, "{p}"),
            Modal::Not(a) => write!(f, "~{a}"),
            Modal::Necessarily(a) => write!(f, "[]{a}"),
            Modal::Possibly(a) => write!(f, "<>{a}"),
            Modal::And(a, b) => write!(f, "({a} & {b})"),
            Modal::Or(a, b) => write!(f, "({a} | {b})"),
            Modal::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("modal syntax error at offset {offset}: {message}")]
pub struct ModalParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses `~`, `&`, `|`, `->` (right associative), `[]` and `<>` over
/// letters `[a-z][a-z0-9]*`.
pub fn parse_modal(src: &str) -> Result<Modal, ModalParseError> {
    let mut p = ModalParser { s: src.as_bytes(), i: 0 };
    let m = p.imp()?;
    p.ws();
    if p.i != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(m)
}

struct ModalParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl ModalParser<'_> {
    fn err(&self, m: &str) -> ModalParseError {
        ModalParseError { offset: self.i, message: m.to_string() }
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(t.as_bytes()) {
            self.i += t.len();
            true
        } else {
            false
        }
    }

    fn imp(&mut self) -> Result<Modal, ModalParseError> {
        let l = self.or()?;
        if self.eat("->") {
            return Ok(Modal::implies(l, self.imp()?));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Modal, ModalParseError> {
        let mut l = self.and()?;
        while self.eat("|") {
            l = Modal::or(l, self.and()?);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Modal, ModalParseError> {
        let mut l = self.unary()?;
        while self.eat("&") {
            l = Modal::and(l, self.unary()?);
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Modal, ModalParseError> {
        if self.eat("~") {
            return Ok(Modal::not(self.unary()?));
        }
        if self.eat("[]") {
            return Ok(Modal::necessarily(self.unary()?));
        }
        if self.eat("<>") {
            return Ok(Modal::possibly(self.unary()?));
        }
        if self.eat("(") {
            let m = self.imp()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(m);
        }
        self.ws();
        let start = self.i;
        if self.i < self.s.len() && self.s[self.i].is_ascii_lowercase() {
            self.i += 1;
            while self.i < self.s.len() && (self.s[self.i].is_ascii_lowercase() || self.s[self.i].is_ascii_digit()) {
                self.i += 1;
            }
            return Ok(Modal::Letter(String::from_utf8_lossy(&self.s[start..self.i]).into_owned()));
        }
        Err(self.err("expected a letter, `~`, `[]`, `<>` or `(`"))
    }
}

/// The four conjuncts that place a translation in the fragment.
#[derive(Clone, Debug)]
pub struct SideConjuncts {
    pub universe: Formula,
    pub small_sets: Formula,
    pub subordination: Formula,
    pub relation: Formula,
}

impl SideConjuncts {
    pub fn parts(&self) -> [&Formula; 4] {
        [&self.universe, &self.small_sets, &self.subordination, &self.relation]
    }
}

#[derive(Clone, Debug)]
pub struct Translation {
    pub side: Option<SideConjuncts>,
    /// One defining formula per compound subformula, innermost first.
    pub defining: Vec<Formula>,
    /// `x in X_phi`.
    pub target: Formula,
    /// Set variable of each distinct subformula.
    pub subformula_sets: Vec<(Modal, Var)>,
}

impl Translation {
    pub fn formula(&self) -> Formula {
        let mut parts: Vec<Formula> = Vec::new();
        if let Some(s) = &self.side {
            parts.extend(s.parts().into_iter().cloned());
        }
        parts.extend(self.defining.iter().cloned());
        parts.push(self.target.clone());
        Formula::and_all(parts).expect("target present")
    }
}

pub fn world() -> Var {
    Var::ind("x")
}

pub fn universe_set() -> Var {
    Var::set("U")
}

pub fn small_sets() -> Var {
    Var::coll("S")
}

pub fn relation_coll() -> Var {
    Var::coll("R")
}

pub fn side_conjuncts() -> SideConjuncts {
    let (s, r) = (small_sets(), relation_coll());
    let z = Var::set("Z");
    SideConjuncts {
        universe: universe_axiom(&universe_set()),
        small_sets: small_sets_axiom(&s, 3),
        subordination: subordination_axiom(&r, &s),
        relation: Formula::forall_set(
            vec![z.clone()],
            Formula::implies(Formula::in_coll(&z, &s), Formula::iff(Formula::in_coll(&z, &r), fewer_than(3, &z))),
        ),
    }
}

struct Translator {
    sets: HashMap<Modal, Var>,
    order: Vec<(Modal, Var)>,
    defining: Vec<Formula>,
    next: usize,
}

impl Translator {
    fn visit(&mut self, m: &Modal) -> Var {
        if let Some(v) = self.sets.get(m) {
            return v.clone();
        }
        let z = Var::ind("z");
        let at = |s: &Var| Formula::in_set(&z, s);
        let every = |body: Formula| Formula::forall_ind(vec![z.clone()], body);
        let (v, def) = match m {
            Modal::Letter(p) => (Var::set(&format!("X_{p}")), None),
            _ => {
                let kids: Vec<Var> = match m {
                    Modal::Not(a) | Modal::Necessarily(a) | Modal::Possibly(a) => vec![self.visit(a)],
                    Modal::And(a, b) | Modal::Or(a, b) => vec![self.visit(a), self.visit(b)],
                    _ => unreachable!("implications are rewritten first"),
                };
                self.next += 1;
                let v = Var::set(&format!("X_{}", self.next));
                let def = match m {
                    Modal::Not(_) => every(Formula::iff(at(&v), Formula::not(at(&kids[0])))),
                    Modal::And(..) => every(Formula::iff(at(&v), Formula::and(at(&kids[0]), at(&kids[1])))),
                    Modal::Or(..) => every(Formula::iff(at(&v), Formula::or(at(&kids[0]), at(&kids[1])))),
                    Modal::Necessarily(_) => {
                        let holds = every(at(&kids[0]));
                        Formula::and(
                            Formula::implies(holds.clone(), every(at(&v))),
                            Formula::implies(Formula::not(holds), every(Formula::not(at(&v)))),
                        )
                    }
                    Modal::Possibly(_) => {
                        let never = every(Formula::not(at(&kids[0])));
                        Formula::and(
                            Formula::implies(Formula::not(never.clone()), every(at(&v))),
                            Formula::implies(never, every(Formula::not(at(&v)))),
                        )
                    }
                    _ => unreachable!(),
                };
                (v, Some(def))
            }
        };
        if let Some(d) = def {
            self.defining.push(d);
        }
        self.sets.insert(m.clone(), v.clone());
        self.order.push((m.clone(), v.clone()));
        v
    }
}

/// Translates `phi`; implications are first rewritten as disjunctions and
/// repeated subformulas share one set variable.
pub fn translate_s5(phi: &Modal, include_side: bool) -> Translation {
    let phi = phi.without_implication();
    let mut t = Translator { sets: HashMap::new(), order: Vec::new(), defining: Vec::new(), next: 0 };
    let top = t.visit(&phi);
    Translation {
        side: include_side.then(side_conjuncts),
        defining: t.defining,
        target: Formula::in_set(&world(), &top),
        subformula_sets: t.order,
    }
}

#[derive(Clone, Debug)]
pub struct S5Options {
    /// Include the fragment side conjuncts and use the fragment decider.
    pub include_side: bool,
    pub decide: DecideOptions,
}

impl Default for S5Options {
    fn default() -> Self {
        S5Options { include_side: true, decide: DecideOptions::default() }
    }
}

/// Satisfiability of `phi` in S5.
pub fn decide_s5(phi: &Modal, opts: &S5Options) -> Result<Verdict, DecideError> {
    let f = translate_s5(phi, opts.include_side).formula();
    if opts.include_side {
        decide_sat_h(&f, 3, &opts.decide)
    } else {
        decide_sat(&f, &opts.decide)
    }
}

/// Validity of `phi` in S5: SAT means the negation has a model, so `phi` is
/// not valid.
pub fn s5_valid(phi: &Modal, opts: &S5Options) -> Result<Status, DecideError> {
    Ok(match decide_s5(&Modal::not(phi.clone()), opts)?.status {
        Status::Sat => Status::Unsat,
        Status::Unsat => Status::Sat,
        Status::Unknown => Status::Unknown,
    })
}

/// A finite S5 model: every world sees every world. Letters missing from the
/// valuation are false everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    pub worlds: usize,
    pub valuation: BTreeMap<String, ElemSet>,
}

impl KripkeModel {
    fn true_at(&self, p: &str, w: usize) -> bool {
        self.valuation.get(p).is_some_and(|s| s.contains(w))
    }
}

pub fn kripke_eval(k: &KripkeModel, w: usize, phi: &Modal) -> bool {
    match phi {
        Modal::Letter(p) => k.true_at(p, w),
        Modal::Not(a) => !kripke_eval(k, w, a),
        Modal::And(a, b) => kripke_eval(k, w, a) && kripke_eval(k, w, b),
        Modal::Or(a, b) => kripke_eval(k, w, a) || kripke_eval(k, w, b),
        Modal::Implies(a, b) => !kripke_eval(k, w, a) || kripke_eval(k, w, b),
        Modal::Necessarily(a) => (0..k.worlds).all(|v| kripke_eval(k, v, a)),
        Modal::Possibly(a) => (0..k.worlds).any(|v| kripke_eval(k, v, a)),
    }
}

fn modal_subformulas(phi: &Modal) -> usize {
    match phi {
        Modal::Letter(_) => 0,
        Modal::Not(a) => modal_subformulas(a),
        Modal::Necessarily(a) | Modal::Possibly(a) => 1 + modal_subformulas(a),
        Modal::And(a, b) | Modal::Or(a, b) | Modal::Implies(a, b) => modal_subformulas(a) + modal_subformulas(b),
    }
}

/// Largest letter count [`s5_oracle`] accepts.
pub const ORACLE_LETTER_LIMIT: usize = 6;

/// Searches models with up to one more world than `phi` has modal
/// subformulas. Worlds are listed by valuation in non-decreasing order, one
/// representative per permutation class.
pub fn s5_oracle(phi: &Modal) -> Option<(KripkeModel, usize)> {
    let letters = phi.letters();
    assert!(letters.len() <= ORACLE_LETTER_LIMIT, "too many letters for exhaustive search");
    let types = 1u32 << letters.len();
    let max_worlds = modal_subformulas(phi) + 1;
    let model = |seq: &[u32]| KripkeModel {
        worlds: seq.len(),
        valuation: letters
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), seq.iter().enumerate().filter(|(_, t)| *t >> i & 1 == 1).map(|(w, _)| w).collect()))
            .collect(),
    };
    for k in 1..=max_worlds {
        let mut seq = vec![0u32; k];
        loop {
            let m = model(&seq);
            if let Some(w) = (0..k).find(|&w| kripke_eval(&m, w, phi)) {
                return Some((m, w));
            }
            // Next non-decreasing sequence.
            let Some(i) = (0..k).rev().find(|&i| seq[i] + 1 < types) else { break };
            let v = seq[i] + 1;
            for t in &mut seq[i..] {
                *t = v;
            }
        }
    }
    None
}

impl Translation {
    /// The interpretation read off a Kripke model: worlds become elements,
    /// `x` the given world, and each subformula set the worlds where the
    /// subformula holds.
    pub fn interpretation_from(&self, k: &KripkeModel, w: usize) -> Interpretation {
        let mut m = Interpretation::new(k.worlds).expect("at least one world");
        m.set_ind(world().name(), w).expect("world in range");
        for (sub, v) in &self.subformula_sets {
            let s: ElemSet = (0..k.worlds).filter(|&u| kripke_eval(k, u, sub)).collect();
            m.set_set(v.name(), s).expect("in range");
        }
        if self.side.is_some() {
            m.set_set(universe_set().name(), ElemSet::full(k.worlds)).expect("in range");
            let small: BTreeSet<ElemSet> = subsets_below(k.worlds, 3).into_iter().collect();
            m.set_coll(small_sets().name(), small.clone()).expect("in range");
            m.set_coll(relation_coll().name(), small).expect("in range");
        }
        m
    }
}
