//! Brute-force oracles shared by the integration tests.
//!
//! The set-language oracle searches interpretations over small domains with a
//! three-valued evaluator: variable values and collection memberships start
//! unknown and are fixed one at a time, and a branch is cut as soon as the
//! formula evaluates to false. It shares no code with the library's
//! evaluator or decider.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use syllog_core::s5::Modal;
use syllog_core::{ElemSet, Formula, Interpretation, Sort};

#[derive(Clone, Debug)]
struct World {
    n: usize,
    inds: BTreeMap<String, Option<usize>>,
    /// Known-bit mask and value mask over elements.
    sets: BTreeMap<String, (u64, u64)>,
    /// Known-bit mask and value mask over subsets, indexed by characteristic mask.
    colls: BTreeMap<String, (u64, u64)>,
}

#[derive(Clone, Debug)]
enum Probe {
    Ind(String),
    SetBit(String, usize),
    CollBit(String, u64),
}

#[derive(Clone, Copy)]
enum Val {
    Elem(usize),
    Set(u64),
}

struct Eval<'a> {
    w: &'a World,
    env: Vec<(String, Val)>,
    probe: Option<Probe>,
}

impl Eval<'_> {
    fn note(&mut self, p: Probe) {
        if self.probe.is_none() {
            self.probe = Some(p);
        }
    }

    fn ind(&mut self, name: &str) -> Option<usize> {
        if let Some((_, v)) = self.env.iter().rev().find(|(k, _)| k == name) {
            let Val::Elem(e) = v else { panic!("{name} bound with the wrong sort") };
            return Some(*e);
        }
        let v = *self.w.inds.get(name).unwrap_or_else(|| panic!("unknown individual {name}"));
        if v.is_none() {
            self.note(Probe::Ind(name.to_string()));
        }
        v
    }

    /// (known, value) bit masks of a set variable.
    fn set(&self, name: &str) -> (u64, u64) {
        if let Some((_, v)) = self.env.iter().rev().find(|(k, _)| k == name) {
            let Val::Set(s) = v else { panic!("{name} bound with the wrong sort") };
            return (full(self.w.n), *s);
        }
        *self.w.sets.get(name).unwrap_or_else(|| panic!("unknown set {name}"))
    }

    fn unknown_bit(&mut self, name: &str, known: u64) {
        let e = (!known & full(self.w.n)).trailing_zeros() as usize;
        self.note(Probe::SetBit(name.to_string(), e));
    }

    fn eval(&mut self, f: &Formula) -> Option<bool> {
        match f {
            Formula::EqInd(x, y) => {
                let a = self.ind(x.name());
                let b = self.ind(y.name());
                Some(a? == b?)
            }
            Formula::InSet(x, s) => {
                let e = self.ind(x.name())?;
                let (k, v) = self.set(s.name());
                if k >> e & 1 == 0 {
                    self.note(Probe::SetBit(s.name().to_string(), e));
                    return None;
                }
                Some(v >> e & 1 == 1)
            }
            Formula::EqSet(a, b) => {
                let (ka, va) = self.set(a.name());
                let (kb, vb) = self.set(b.name());
                if (va ^ vb) & ka & kb != 0 {
                    return Some(false);
                }
                let all = full(self.w.n);
                if ka & kb == all {
                    return Some(true);
                }
                if ka != all {
                    self.unknown_bit(a.name(), ka);
                } else {
                    self.unknown_bit(b.name(), kb);
                }
                None
            }
            Formula::InColl(s, a) => {
                let (k, v) = self.set(s.name());
                if k != full(self.w.n) {
                    self.unknown_bit(s.name(), k);
                    return None;
                }
                let (ck, cv) = *self.w.colls.get(a.name()).unwrap_or_else(|| panic!("unknown collection {}", a.name()));
                if ck >> v & 1 == 0 {
                    self.note(Probe::CollBit(a.name().to_string(), v));
                    return None;
                }
                Some(cv >> v & 1 == 1)
            }
            Formula::Not(g) => self.eval(g).map(|b| !b),
            Formula::And(a, b) => kleene_and(self.eval(a), || self.eval(b)),
            Formula::Or(a, b) => kleene_and(self.eval(a).map(|x| !x), || self.eval(b).map(|x| !x)).map(|x| !x),
            Formula::Implies(a, b) => kleene_and(self.eval(a), || self.eval(b).map(|x| !x)).map(|x| !x),
            Formula::Iff(a, b) => {
                let x = self.eval(a);
                let y = self.eval(b);
                Some(x? == y?)
            }
            Formula::ForallInd(vs, body) => {
                let n = self.w.n;
                self.forall(vs.len(), n as u64, body, |vs_i, i| (vs[vs_i].name().to_string(), Val::Elem(i as usize)))
            }
            Formula::ForallSet(vs, body) => {
                let n = self.w.n;
                self.forall(vs.len(), 1u64 << n, body, |vs_i, s| (vs[vs_i].name().to_string(), Val::Set(s)))
            }
        }
    }

    fn forall(
        &mut self,
        k: usize,
        range: u64,
        body: &Formula,
        bind: impl Fn(usize, u64) -> (String, Val),
    ) -> Option<bool> {
        let mut t = vec![0u64; k];
        let mut unknown = false;
        loop {
            let mark = self.env.len();
            for (i, &v) in t.iter().enumerate() {
                self.env.push(bind(i, v));
            }
            let r = self.eval(body);
            self.env.truncate(mark);
            match r {
                Some(false) => return Some(false),
                None => unknown = true,
                Some(true) => {}
            }
            let mut i = 0;
            loop {
                if i == k {
                    return if unknown { None } else { Some(true) };
                }
                t[i] += 1;
                if t[i] < range {
                    break;
                }
                t[i] = 0;
                i += 1;
            }
        }
    }
}

fn kleene_and(a: Option<bool>, b: impl FnOnce() -> Option<bool>) -> Option<bool> {
    if a == Some(false) {
        return Some(false);
    }
    match (a, b()) {
        (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn full(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn eval3(w: &World, f: &Formula) -> (Option<bool>, Option<Probe>) {
    let mut e = Eval { w, env: Vec::new(), probe: None };
    let r = e.eval(f);
    (r, e.probe)
}

fn empty_world(f: &Formula, n: usize) -> World {
    let mut w = World { n, inds: BTreeMap::new(), sets: BTreeMap::new(), colls: BTreeMap::new() };
    for v in f.free_vars() {
        match v.sort() {
            Sort::Individual => {
                w.inds.insert(v.name().to_string(), None);
            }
            Sort::Set => {
                w.sets.insert(v.name().to_string(), (0, 0));
            }
            Sort::Collection => {
                w.colls.insert(v.name().to_string(), (0, 0));
            }
        }
    }
    w
}

fn search(w: &mut World, f: &Formula, budget: &mut u64) -> Option<Option<World>> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    match eval3(w, f) {
        (Some(true), _) => Some(Some(w.clone())),
        (Some(false), _) => Some(None),
        (None, probe) => {
            let probe = probe.expect("undetermined result names an unknown");
            let choices: Vec<u64> = match &probe {
                Probe::Ind(_) => (0..w.n as u64).collect(),
                _ => vec![0, 1],
            };
            for c in choices {
                let saved = w.clone();
                match &probe {
                    Probe::Ind(x) => {
                        w.inds.insert(x.clone(), Some(c as usize));
                    }
                    Probe::SetBit(s, e) => {
                        let (k, v) = w.sets[s];
                        w.sets.insert(s.clone(), (k | 1 << e, v | c << e));
                    }
                    Probe::CollBit(a, s) => {
                        let (k, v) = w.colls[a];
                        w.colls.insert(a.clone(), (k | 1 << s, v | c << s));
                    }
                }
                let r = search(w, f, budget)?;
                *w = saved;
                if r.is_some() {
                    return Some(r);
                }
            }
            Some(None)
        }
    }
}

#[derive(Clone, Debug)]
pub enum Oracle {
    Sat(Interpretation),
    Unsat,
    /// The node budget ran out.
    Unknown,
}

impl Oracle {
    pub fn is_sat(&self) -> bool {
        matches!(self, Oracle::Sat(_))
    }
}

fn to_interpretation(w: &World) -> Interpretation {
    let mut m = Interpretation::new(w.n).unwrap();
    for (x, v) in &w.inds {
        m.set_ind(x, v.unwrap_or(0)).unwrap();
    }
    for (s, (_, v)) in &w.sets {
        m.set_set(s, ElemSet::from_mask(*v)).unwrap();
    }
    for (a, (_, v)) in &w.colls {
        let c: BTreeSet<ElemSet> = (0..1u64 << w.n).filter(|s| v >> s & 1 == 1).map(ElemSet::from_mask).collect();
        m.set_coll(a, c).unwrap();
    }
    m
}

/// Looks for a model with 1 to `max_n` elements.
pub fn brute_force_sat(f: &Formula, max_n: usize, budget: u64) -> Oracle {
    assert!(max_n <= 6);
    let mut left = budget;
    for n in 1..=max_n {
        let mut w = empty_world(f, n);
        match search(&mut w, f, &mut left) {
            None => return Oracle::Unknown,
            Some(Some(found)) => return Oracle::Sat(to_interpretation(&found)),
            Some(None) => {}
        }
    }
    Oracle::Unsat
}

/// Truth of `f` in `m`, which must assign every free variable and have at
/// most 6 elements.
pub fn holds(m: &Interpretation, f: &Formula) -> bool {
    let n = m.domain_size();
    assert!(n <= 6);
    let mut w = empty_world(f, n);
    for x in w.inds.clone().keys() {
        w.inds.insert(x.clone(), Some(m.ind(x).unwrap_or_else(|| panic!("{x} unassigned"))));
    }
    for s in w.sets.clone().keys() {
        let v = m.set(s).unwrap_or_else(|| panic!("{s} unassigned")).to_mask().unwrap();
        w.sets.insert(s.clone(), (full(n), v));
    }
    for a in w.colls.clone().keys() {
        let v = m.coll(a).unwrap_or_else(|| panic!("{a} unassigned")).iter().fold(0u64, |acc, s| acc | 1 << s.to_mask().unwrap());
        w.colls.insert(a.clone(), (full(1 << n), v));
    }
    eval3(&w, f).0.expect("all values known")
}

/// Truth in a model with one world per valuation in `worlds`, at world `at`.
/// Valuations are bit masks over the letter list.
pub fn modal_holds(letters: &[String], worlds: &[u32], at: usize, f: &Modal) -> bool {
    match f {
        Modal::Letter(p) => {
            let i = letters.iter().position(|l| l == p).expect("letter listed");
            worlds[at] >> i & 1 == 1
        }
        Modal::Not(a) => !modal_holds(letters, worlds, at, a),
        Modal::And(a, b) => modal_holds(letters, worlds, at, a) && modal_holds(letters, worlds, at, b),
        Modal::Or(a, b) => modal_holds(letters, worlds, at, a) || modal_holds(letters, worlds, at, b),
        Modal::Implies(a, b) => !modal_holds(letters, worlds, at, a) || modal_holds(letters, worlds, at, b),
        Modal::Necessarily(a) => (0..worlds.len()).all(|v| modal_holds(letters, worlds, v, a)),
        Modal::Possibly(a) => (0..worlds.len()).any(|v| modal_holds(letters, worlds, v, a)),
    }
}

/// S5 satisfiability by trying every non-empty set of valuations as the set
/// of worlds. Worlds with equal valuations are indistinguishable, so this is
/// exhaustive.
pub fn modal_sat(f: &Modal) -> Option<(Vec<u32>, usize)> {
    let letters = f.letters();
    assert!(letters.len() <= 4);
    let vals = 1u32 << letters.len();
    for choice in 1u64..(1u64 << vals) {
        let worlds: Vec<u32> = (0..vals).filter(|v| choice >> v & 1 == 1).collect();
        for at in 0..worlds.len() {
            if modal_holds(&letters, &worlds, at, f) {
                return Some((worlds, at));
            }
        }
    }
    None
}

/// All modal formulas with exactly `k` connectives over the given letters,
/// with implication included.
pub fn modal_formulas(letters: &[&str], k: usize) -> Vec<Modal> {
    let mut memo: HashMap<usize, Vec<Modal>> = HashMap::new();
    fn go(letters: &[&str], k: usize, memo: &mut HashMap<usize, Vec<Modal>>) -> Vec<Modal> {
        if let Some(v) = memo.get(&k) {
            return v.clone();
        }
        let mut out = Vec::new();
        if k == 0 {
            out.extend(letters.iter().map(|p| Modal::letter(p)));
        } else {
            for a in go(letters, k - 1, memo) {
                out.push(Modal::not(a.clone()));
                out.push(Modal::necessarily(a.clone()));
                out.push(Modal::possibly(a));
            }
            for i in 0..k {
                let left = go(letters, i, memo);
                let right = go(letters, k - 1 - i, memo);
                for a in &left {
                    for b in &right {
                        out.push(Modal::and(a.clone(), b.clone()));
                        out.push(Modal::or(a.clone(), b.clone()));
                        out.push(Modal::implies(a.clone(), b.clone()));
                    }
                }
            }
        }
        memo.insert(k, out.clone());
        out
    }
    go(letters, k, &mut memo)
}
