//! The bounded-cardinality fragment.
//!
//! A formula is in the fragment for a given `h` when it is a conjunction of
//! - a universe axiom `(forall z)(z in U)`,
//! - a small-sets axiom stating that `S` holds exactly the sets with fewer
//!   than `h` elements,
//! - for every other collection variable `A`, `(forall Z)(Z in A -> Z in S)`,
//! - further conjuncts whose quantifier prefixes have length at most `h` and
//!   whose set quantifiers are guarded by membership in `S`.
//!
//! Collections then only contain sets with fewer than `h` elements, so set
//! quantifiers need only range over such sets.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::formulas::{rename_apart, render, Formula, FreshNames, Sort, Var};
use crate::relativizer::BoundParams;
use crate::restriction::is_3lqsr;

/// Result of matching a formula against the fragment's shape.
#[derive(Clone, Debug, Serialize)]
pub struct HFragmentReport {
    pub h: usize,
    pub in_fragment: bool,
    pub universe_set: Option<String>,
    pub small_sets: Option<String>,
    pub subordinated: Vec<String>,
    pub other_conjuncts: usize,
    pub violations: Vec<String>,
}

/// `(forall z)(z in universe)`.
pub fn universe_axiom(universe: &Var) -> Formula {
    let z = Var::ind("z");
    Formula::forall_ind(vec![z.clone()], Formula::in_set(&z, universe))
}

/// `AND_i zi in set -> OR_{i<j} zi = zj` over `h` bound variables; holds
/// exactly when `set` has fewer than `h` elements. For `h = 1` the
/// disjunction is empty and `!(z1 = z1)` stands for false.
pub fn fewer_than(h: usize, set: &Var) -> Formula {
    assert!(h >= 1);
    let zs: Vec<Var> = (1..=h).map(|i| Var::ind(&format!("z{i}"))).collect();
    let members = Formula::and_all(zs.iter().map(|z| Formula::in_set(z, set))).expect("h >= 1");
    let mut eqs = Vec::new();
    for i in 0..h {
        for j in i + 1..h {
            eqs.push(Formula::eq_ind(&zs[i], &zs[j]));
        }
    }
    let clash = Formula::or_all(eqs).unwrap_or_else(|| Formula::falsum_on(&zs[0]));
    Formula::forall_ind(zs, Formula::implies(members, clash))
}

/// `(forall Z)(Z in small <-> Z has fewer than h elements)`.
pub fn small_sets_axiom(small: &Var, h: usize) -> Formula {
    let z = Var::set("Z");
    Formula::forall_set(vec![z.clone()], Formula::iff(Formula::in_coll(&z, small), fewer_than(h, &z)))
}

/// `(forall Z)(Z in coll -> Z in small)`.
pub fn subordination_axiom(coll: &Var, small: &Var) -> Formula {
    let z = Var::set("Z");
    Formula::forall_set(
        vec![z.clone()],
        Formula::implies(Formula::in_coll(&z, coll), Formula::in_coll(&z, small)),
    )
}

fn as_universe_axiom(f: &Formula) -> Option<Var> {
    match f {
        Formula::ForallInd(zs, body) if zs.len() == 1 => match &**body {
            Formula::InSet(z, u) if *z == zs[0] => Some(u.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn unordered_eq(f: &Formula) -> Option<(Var, Var)> {
    match f {
        Formula::EqInd(a, b) if a != b => Some(if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) }),
        _ => None,
    }
}

/// Matches `AND_i zi in Z -> OR_{i<j} zi = zj` with `h` distinct variables.
fn is_fewer_than(f: &Formula, h: usize, z: &Var) -> bool {
    let Formula::ForallInd(zs, body) = f else { return false };
    let distinct: BTreeSet<&Var> = zs.iter().collect();
    if zs.len() != h || distinct.len() != h {
        return false;
    }
    let Formula::Implies(g, d) = &**body else { return false };
    let guard: BTreeSet<Formula> = g.conjuncts().into_iter().cloned().collect();
    let want: BTreeSet<Formula> = zs.iter().map(|x| Formula::in_set(x, z)).collect();
    if guard != want {
        return false;
    }
    if h == 1 {
        return matches!(&**d, Formula::Not(e) if matches!(&**e, Formula::EqInd(a, b) if a == b && *a == zs[0]));
    }
    let got: Option<BTreeSet<(Var, Var)>> = d.disjuncts().into_iter().map(unordered_eq).collect();
    let mut pairs = BTreeSet::new();
    for i in 0..h {
        for j in i + 1..h {
            pairs.insert(unordered_eq(&Formula::eq_ind(&zs[i], &zs[j])).expect("distinct"));
        }
    }
    got == Some(pairs)
}

fn as_small_sets_axiom(f: &Formula, h: usize) -> Option<Var> {
    let Formula::ForallSet(zs, body) = f else { return None };
    if zs.len() != 1 {
        return None;
    }
    let Formula::Iff(a, b) = &**body else { return None };
    for (m, q) in [(a, b), (b, a)] {
        if let Formula::InColl(z, s) = &**m {
            if *z == zs[0] && is_fewer_than(q, h, z) {
                return Some(s.clone());
            }
        }
    }
    None
}

fn as_subordination(f: &Formula, small: &Var) -> Option<Var> {
    let Formula::ForallSet(zs, body) = f else { return None };
    let Formula::Implies(a, b) = &**body else { return None };
    match (&**a, &**b) {
        (Formula::InColl(z1, c), Formula::InColl(z2, s))
            if zs.len() == 1 && *z1 == zs[0] && *z2 == zs[0] && s == small =>
        {
            Some(c.clone())
        }
        _ => None,
    }
}

fn check_other(f: &Formula, h: usize, small: &Var, out: &mut Vec<String>) {
    match f {
        Formula::ForallInd(zs, _) if zs.len() > h => {
            out.push(format!("individual prefix of length {} exceeds {h} in `{}`", zs.len(), render(f)))
        }
        Formula::ForallSet(zs, body) => {
            if zs.len() > h {
                out.push(format!("set prefix of length {} exceeds {h} in `{}`", zs.len(), render(f)));
            }
            let guarded = match &**body {
                Formula::Implies(g, _) => {
                    let got: BTreeSet<Formula> = g.conjuncts().into_iter().cloned().collect();
                    let want: BTreeSet<Formula> = zs.iter().map(|z| Formula::in_coll(z, small)).collect();
                    got == want
                }
                _ => false,
            };
            if !guarded {
                out.push(format!("set quantifier not guarded by `{small}`: `{}`", render(f)));
            }
            body.walk(&mut |g| {
                if let Formula::ForallInd(zs, _) = g {
                    if zs.len() > h {
                        out.push(format!("individual prefix of length {} exceeds {h} in `{}`", zs.len(), render(g)));
                    }
                }
            });
        }
        _ => {
            for c in f.children() {
                if !f.is_quantified() {
                    check_other(c, h, small, out);
                }
            }
        }
    }
}

/// Matches `f` against the fragment shape for `h`, up to the order of
/// conjuncts and of the members of guards and disjunctions.
pub fn recognize_h(f: &Formula, h: usize) -> HFragmentReport {
    let mut rep = HFragmentReport {
        h,
        in_fragment: false,
        universe_set: None,
        small_sets: None,
        subordinated: Vec::new(),
        other_conjuncts: 0,
        violations: Vec::new(),
    };
    if h < 2 {
        rep.violations.push("h must be at least 2".into());
        return rep;
    }
    if let Err(e) = f.check() {
        rep.violations.push(e.to_string());
        return rep;
    }
    if let Some(v) = is_3lqsr(f).violations().next() {
        rep.violations.push(format!("link condition fails for `{}`", v.inner_atom));
    }
    let conj = f.conjuncts();
    let mut used = vec![false; conj.len()];
    if let Some(i) = conj.iter().position(|c| as_universe_axiom(c).is_some()) {
        rep.universe_set = as_universe_axiom(conj[i]).map(|v| v.name().to_string());
        used[i] = true;
    } else {
        rep.violations.push("missing universe axiom `(forall z)(z in U)`".into());
    }
    let small = conj.iter().position(|c| as_small_sets_axiom(c, h).is_some()).map(|i| {
        used[i] = true;
        as_small_sets_axiom(conj[i], h).expect("matched")
    });
    let Some(small) = small else {
        rep.violations.push(format!("missing small-sets axiom for h = {h}"));
        return rep;
    };
    rep.small_sets = Some(small.name().to_string());
    let mut subordinated = BTreeSet::new();
    for (i, c) in conj.iter().enumerate() {
        if used[i] {
            continue;
        }
        if let Some(a) = as_subordination(c, &small) {
            subordinated.insert(a);
            used[i] = true;
        }
    }
    for (i, c) in conj.iter().enumerate() {
        if !used[i] {
            rep.other_conjuncts += 1;
            check_other(c, h, &small, &mut rep.violations);
        }
    }
    for v in f.free_vars() {
        if v.sort() == Sort::Collection && v != small && !subordinated.contains(&v) {
            rep.violations.push(format!("collection `{v}` lacks `(forall Z)(Z in {v} -> Z in {small})`"));
        }
    }
    rep.subordinated = subordinated.iter().map(|v| v.name().to_string()).collect();
    rep.in_fragment = rep.violations.is_empty();
    rep
}

/// A set of formulas produced by the decomposition rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HBranch {
    pub formulas: Vec<Formula>,
    pub fresh: Vec<Var>,
}

impl HBranch {
    pub fn to_formula(&self) -> Formula {
        Formula::and_all(self.formulas.iter().cloned()).expect("branch is non-empty")
    }
}

enum Step {
    Split(Vec<Formula>),
    Choose(Formula, Formula),
    Keep,
}

fn step(f: &Formula, fresh: &mut FreshNames, made: &mut Vec<Var>) -> Step {
    use Formula::*;
    let not = |x: &Formula| Formula::not(x.clone());
    match f {
        And(a, b) => Step::Split(vec![(**a).clone(), (**b).clone()]),
        Or(a, b) => Step::Choose((**a).clone(), (**b).clone()),
        Implies(a, b) => Step::Choose(not(a), (**b).clone()),
        Iff(a, b) => Step::Choose(
            Formula::and((**a).clone(), (**b).clone()),
            Formula::and(not(a), not(b)),
        ),
        Not(g) => match &**g {
            Not(a) => Step::Split(vec![(**a).clone()]),
            Or(a, b) => Step::Split(vec![not(a), not(b)]),
            Implies(a, b) => Step::Split(vec![(**a).clone(), not(b)]),
            And(a, b) => Step::Choose(not(a), not(b)),
            Iff(a, b) => Step::Choose(
                Formula::and((**a).clone(), not(b)),
                Formula::and(not(a), (**b).clone()),
            ),
            ForallInd(vs, body) | ForallSet(vs, body) => {
                let map: HashMap<Var, Var> = vs
                    .iter()
                    .map(|v| {
                        let w = fresh.fresh_like(v);
                        made.push(w.clone());
                        (v.clone(), w)
                    })
                    .collect();
                Step::Split(vec![Formula::not(body.substitute(&map))])
            }
            _ => Step::Keep,
        },
        _ => Step::Keep,
    }
}

#[derive(Clone)]
struct State {
    pending: Vec<Formula>,
    done: Vec<Formula>,
    fresh: FreshNames,
    made: Vec<Var>,
}

impl State {
    fn start(f: &Formula) -> State {
        let g = rename_apart(f);
        State { fresh: FreshNames::for_formula(&g), pending: vec![g], done: Vec::new(), made: Vec::new() }
    }

    fn keep(&mut self, f: Formula) {
        if !self.done.contains(&f) {
            self.done.push(f);
        }
    }

    /// Runs to completion or to the first choice point.
    fn run(&mut self, choose: bool) -> Option<(Formula, Formula)> {
        while let Some(f) = self.pending.pop() {
            match step(&f, &mut self.fresh, &mut self.made) {
                Step::Split(parts) => self.pending.extend(parts.into_iter().rev()),
                Step::Choose(a, b) if choose => return Some((a, b)),
                _ => self.keep(f),
            }
        }
        None
    }

    fn branch(self) -> HBranch {
        HBranch { formulas: self.done, fresh: self.made }
    }
}

/// Lazily enumerates every branch of the full decomposition, left choices
/// first. Each branch is a set of literals whose conjunction implies the
/// input; the input is satisfiable iff some branch is.
pub struct Branches {
    stack: Vec<State>,
}

impl Iterator for Branches {
    type Item = HBranch;

    fn next(&mut self) -> Option<HBranch> {
        while let Some(mut st) = self.stack.pop() {
            match st.run(true) {
                None => return Some(st.branch()),
                Some((a, b)) => {
                    let mut right = st.clone();
                    right.pending.push(b);
                    st.pending.push(a);
                    self.stack.push(right);
                    self.stack.push(st);
                }
            }
        }
        None
    }
}

pub fn flatten_h(f: &Formula) -> Branches {
    Branches { stack: vec![State::start(f)] }
}

/// Applies only the non-branching rules; disjunctive members are kept whole.
pub fn flatten_conjunctive(f: &Formula) -> HBranch {
    let mut st = State::start(f);
    st.run(false);
    st.branch()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pol {
    Pos,
    Neg,
    Both,
}

impl Pol {
    fn flip(self) -> Pol {
        match self {
            Pol::Pos => Pol::Neg,
            Pol::Neg => Pol::Pos,
            Pol::Both => Pol::Both,
        }
    }

    fn can_be_neg(self) -> bool {
        self != Pol::Pos
    }

    fn can_be_pos(self) -> bool {
        self != Pol::Neg
    }
}

#[derive(Default)]
struct Tally {
    ind_witnesses: u64,
    set_witnesses: u64,
    nested: u64,
    max_set_prefix: u32,
    max_nested_prefix: u64,
}

fn tally(f: &Formula, pol: Pol, outer: Option<Pol>, t: &mut Tally) {
    match f {
        Formula::Not(a) => tally(a, pol.flip(), outer, t),
        Formula::And(a, b) | Formula::Or(a, b) => {
            tally(a, pol, outer, t);
            tally(b, pol, outer, t);
        }
        Formula::Implies(a, b) => {
            tally(a, pol.flip(), outer, t);
            tally(b, pol, outer, t);
        }
        Formula::Iff(a, b) => {
            tally(a, Pol::Both, outer, t);
            tally(b, Pol::Both, outer, t);
        }
        Formula::ForallInd(zs, _) => {
            let k = zs.len() as u64;
            match outer {
                None if pol.can_be_neg() => t.ind_witnesses += k,
                None => {}
                Some(op) => {
                    if op.can_be_neg() {
                        t.ind_witnesses += k;
                    }
                    if op.can_be_pos() {
                        t.nested += 1;
                        t.max_nested_prefix = t.max_nested_prefix.max(k);
                    }
                }
            }
        }
        Formula::ForallSet(zs, body) => {
            if pol.can_be_neg() {
                t.set_witnesses += zs.len() as u64;
            }
            if pol.can_be_pos() {
                t.max_set_prefix = t.max_set_prefix.max(zs.len() as u32);
            }
            tally(body, Pol::Pos, Some(pol), t);
        }
        _ => {}
    }
}

/// Bound parameters covering every branch of the full decomposition of the
/// given formulas: witnesses are counted for every quantifier that may end up
/// negated, and nested quantifiers for every set quantifier that may stay
/// positive.
pub fn h_bound_params(formulas: &[Formula]) -> BoundParams {
    let mut t = Tally::default();
    let mut free = BTreeSet::new();
    for f in formulas {
        tally(f, Pol::Pos, None, &mut t);
        free.extend(f.free_vars());
    }
    let count = |s: Sort| free.iter().filter(|v| v.sort() == s).count() as u64;
    BoundParams {
        individuals: count(Sort::Individual) + t.ind_witnesses,
        sets: count(Sort::Set) + t.set_witnesses,
        nested: t.nested,
        max_set_prefix: t.max_set_prefix,
        max_nested_prefix: t.max_nested_prefix,
    }
}

/// Wraps a propositional CNF (clauses of non-zero signed letter indices) as a
/// fragment formula with `h = 2`: letter `i` becomes `x in P_i`.
pub fn encode_cnf(clauses: &[Vec<i32>]) -> Formula {
    let x = Var::ind("x");
    let universe = Var::set("U");
    let small = Var::coll("S");
    let lit = |l: i32| {
        let a = Formula::in_set(&x, &Var::set(&format!("P_{}", l.unsigned_abs())));
        if l > 0 {
            a
        } else {
            Formula::not(a)
        }
    };
    let mut parts = vec![universe_axiom(&universe), small_sets_axiom(&small, 2)];
    for c in clauses {
        parts.push(Formula::or_all(c.iter().map(|&l| lit(l))).unwrap_or_else(|| Formula::falsum_on(&x)));
    }
    Formula::and_all(parts).expect("non-empty")
}
