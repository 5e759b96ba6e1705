//! Fixed-size model search by grounding to propositional clauses.
//!
//! Every quantifier is expanded over a domain of `n` candidate elements. An
//! element `e` is in use when `active[e]` holds, and the active elements form
//! a prefix, so a model with exactly `k` elements corresponds to
//! `active[k-1] & !active[k]`. Instances of quantifiers that mention an
//! inactive element are switched off through the same flags, which lets one
//! grounding answer the question for every size up to `n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use varisat::{ExtendFormula, Lit, Solver};

use crate::elemset::{subsets_below, ElemSet};
use crate::formulas::{Formula, Sort, Var};
use crate::restriction::{certify, link_conditions, Certification};
use crate::semantics::Interpretation;

/// Which subsets set quantifiers and collections range over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Universe {
    All,
    /// Subsets with fewer than `h` elements.
    Below(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum G {
    T,
    F,
    L(Lit),
}

impl std::ops::Not for G {
    type Output = G;
    fn not(self) -> G {
        match self {
            G::T => G::F,
            G::F => G::T,
            G::L(l) => G::L(!l),
        }
    }
}

#[derive(Clone, Debug)]
enum Bound {
    Elem(usize),
    Set(ElemSet),
}

enum IndRef {
    Fixed(usize),
    Free(Var),
}

enum SetRef {
    Fixed(ElemSet),
    Free(Var),
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct GroundStats {
    pub variables: u64,
    pub clauses: u64,
    pub solver_calls: u64,
}

pub(crate) struct Grounder {
    solver: Solver<'static>,
    n: usize,
    universe: Universe,
    subsets: Option<Vec<ElemSet>>,
    active: Vec<Lit>,
    inds: BTreeMap<Var, Vec<Lit>>,
    sets: BTreeMap<Var, Vec<Lit>>,
    colls: BTreeSet<Var>,
    memberships: HashMap<(Var, ElemSet), Lit>,
    pair_cache: HashMap<(u8, Var, Var), G>,
    linked: HashMap<*const Formula, bool>,
    model: Vec<bool>,
    pub stats: GroundStats,
}

impl Grounder {
    /// Sets up candidate elements `0..n` and literals for the given free
    /// variables. With `symmetry`, the i-th individual variable (in sorted
    /// order) may only take values `<= i`, which loses no model up to
    /// renaming of elements.
    pub fn new(n: usize, universe: Universe, symmetry: bool, free: &BTreeSet<Var>) -> Self {
        assert!(n >= 1);
        let mut g = Grounder {
            solver: Solver::new(),
            n,
            universe,
            subsets: None,
            active: Vec::new(),
            inds: BTreeMap::new(),
            sets: BTreeMap::new(),
            colls: BTreeSet::new(),
            memberships: HashMap::new(),
            pair_cache: HashMap::new(),
            linked: HashMap::new(),
            model: Vec::new(),
            stats: GroundStats::default(),
        };
        g.active = (0..n).map(|_| g.new_lit()).collect();
        g.clause(&[g.active[0]]);
        for e in 1..n {
            g.clause(&[!g.active[e], g.active[e - 1]]);
        }
        let mut rank = 0;
        for v in free {
            match v.sort() {
                Sort::Individual => {
                    let lits: Vec<Lit> = (0..n).map(|_| g.new_lit()).collect();
                    g.clause(&lits);
                    for i in 0..n {
                        g.clause(&[!lits[i], g.active[i]]);
                        for j in i + 1..n {
                            g.clause(&[!lits[i], !lits[j]]);
                        }
                        if symmetry && i > rank {
                            g.clause(&[!lits[i]]);
                        }
                    }
                    rank += 1;
                    g.inds.insert(v.clone(), lits);
                }
                Sort::Set => {
                    let lits: Vec<Lit> = (0..n).map(|_| g.new_lit()).collect();
                    for (i, l) in lits.iter().enumerate() {
                        g.clause(&[!*l, g.active[i]]);
                    }
                    g.sets.insert(v.clone(), lits);
                }
                Sort::Collection => {
                    g.colls.insert(v.clone());
                }
            }
        }
        g
    }

    /// Literal meaning "the model has at most `k` elements", for `k < n`.
    pub fn at_most(&self, k: usize) -> Lit {
        !self.active[k]
    }

    /// Literal meaning "the model has at least `k` elements", for `1 <= k <= n`.
    pub fn at_least(&self, k: usize) -> Lit {
        self.active[k - 1]
    }

    fn new_lit(&mut self) -> Lit {
        self.stats.variables += 1;
        self.solver.new_lit()
    }

    fn clause(&mut self, c: &[Lit]) {
        self.stats.clauses += 1;
        self.solver.add_clause(c);
    }

    fn subsets(&mut self) -> &[ElemSet] {
        let n = self.n;
        let universe = self.universe;
        self.subsets.get_or_insert_with(|| match universe {
            Universe::All => (0u64..(1u64 << n)).map(ElemSet::from_mask).collect(),
            Universe::Below(h) => subsets_below(n, h),
        })
    }

    fn in_universe(&self, u: &ElemSet) -> bool {
        match self.universe {
            Universe::All => true,
            Universe::Below(h) => u.len() < h,
        }
    }

    fn and(&mut self, gs: impl IntoIterator<Item = G>) -> G {
        let mut lits = Vec::new();
        for g in gs {
            match g {
                G::F => return G::F,
                G::T => {}
                G::L(l) => lits.push(l),
            }
        }
        lits.sort_by_key(|l| l.code());
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return G::F;
        }
        match lits.len() {
            0 => G::T,
            1 => G::L(lits[0]),
            _ => {
                let t = self.new_lit();
                for &l in &lits {
                    self.clause(&[!t, l]);
                }
                let mut big: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                big.push(t);
                self.clause(&big);
                G::L(t)
            }
        }
    }

    fn or(&mut self, gs: impl IntoIterator<Item = G>) -> G {
        let negs: Vec<G> = gs.into_iter().map(|g| !g).collect();
        !self.and(negs)
    }

    fn iff(&mut self, a: G, b: G) -> G {
        match (a, b) {
            (G::T, x) | (x, G::T) => x,
            (G::F, x) | (x, G::F) => !x,
            (G::L(x), G::L(y)) if x == y => G::T,
            (G::L(x), G::L(y)) if x == !y => G::F,
            (G::L(x), G::L(y)) => {
                let t = self.new_lit();
                self.clause(&[!t, !x, y]);
                self.clause(&[!t, x, !y]);
                self.clause(&[t, x, y]);
                self.clause(&[t, !x, !y]);
                G::L(t)
            }
        }
    }

    fn guard(&self, u: Option<usize>) -> G {
        match u {
            None | Some(0) => G::T,
            Some(e) => G::L(self.active[e]),
        }
    }

    fn membership(&mut self, a: &Var, u: &ElemSet) -> G {
        if !self.in_universe(u) || !u.within(self.n) {
            return G::F;
        }
        if let Some(&l) = self.memberships.get(&(a.clone(), u.clone())) {
            return G::L(l);
        }
        let l = self.new_lit();
        if let Some(m) = u.max_elem() {
            if m > 0 {
                self.clause(&[!l, self.active[m]]);
            }
        }
        self.colls.insert(a.clone());
        self.memberships.insert((a.clone(), u.clone()), l);
        G::L(l)
    }

    fn ind_ref(env: &[(Var, Bound)], v: &Var) -> IndRef {
        match env.iter().rev().find(|(w, _)| w == v) {
            Some((_, Bound::Elem(e))) => IndRef::Fixed(*e),
            _ => IndRef::Free(v.clone()),
        }
    }

    fn set_ref(env: &[(Var, Bound)], v: &Var) -> SetRef {
        match env.iter().rev().find(|(w, _)| w == v) {
            Some((_, Bound::Set(s))) => SetRef::Fixed(s.clone()),
            _ => SetRef::Free(v.clone()),
        }
    }

    fn ind_lits(&mut self, v: &Var) -> Vec<Lit> {
        if let Some(l) = self.inds.get(v) {
            return l.clone();
        }
        // A variable not declared free: treat as an unconstrained individual.
        let lits: Vec<Lit> = (0..self.n).map(|_| self.new_lit()).collect();
        self.clause(&lits);
        for i in 0..self.n {
            self.clause(&[!lits[i], self.active[i]]);
            for j in i + 1..self.n {
                self.clause(&[!lits[i], !lits[j]]);
            }
        }
        self.inds.insert(v.clone(), lits.clone());
        lits
    }

    fn set_lits(&mut self, v: &Var) -> Vec<Lit> {
        if let Some(l) = self.sets.get(v) {
            return l.clone();
        }
        let lits: Vec<Lit> = (0..self.n).map(|_| self.new_lit()).collect();
        for (i, l) in lits.iter().enumerate() {
            self.clause(&[!*l, self.active[i]]);
        }
        self.sets.insert(v.clone(), lits.clone());
        lits
    }

    fn cached(&mut self, key: (u8, Var, Var), build: impl FnOnce(&mut Self) -> G) -> G {
        if let Some(&g) = self.pair_cache.get(&key) {
            return g;
        }
        let g = build(self);
        self.pair_cache.insert(key, g);
        g
    }

    /// Aux literal equivalent to `OR_e (a_e & b_e)` when `a` is one-hot.
    fn one_hot_meet(&mut self, a: &[Lit], b: &[Lit]) -> G {
        let t = self.new_lit();
        for e in 0..self.n {
            self.clause(&[!t, !a[e], b[e]]);
            self.clause(&[!a[e], !b[e], t]);
        }
        G::L(t)
    }

    fn set_equals(&mut self, s: &[Lit], u: &ElemSet) -> G {
        if !u.within(self.n) {
            return G::F;
        }
        let lits: Vec<G> = (0..self.n).map(|e| if u.contains(e) { G::L(s[e]) } else { G::L(!s[e]) }).collect();
        self.and(lits)
    }

    fn atom(&mut self, f: &Formula, env: &[(Var, Bound)]) -> G {
        match f {
            Formula::EqInd(a, b) => match (Self::ind_ref(env, a), Self::ind_ref(env, b)) {
                (IndRef::Fixed(x), IndRef::Fixed(y)) => bool_g(x == y),
                (IndRef::Fixed(x), IndRef::Free(v)) | (IndRef::Free(v), IndRef::Fixed(x)) => {
                    if x < self.n {
                        G::L(self.ind_lits(&v)[x])
                    } else {
                        G::F
                    }
                }
                (IndRef::Free(v), IndRef::Free(w)) if v == w => G::T,
                (IndRef::Free(v), IndRef::Free(w)) => {
                    let (v, w) = if v < w { (v, w) } else { (w, v) };
                    self.cached((0, v.clone(), w.clone()), |g| {
                        let (a, b) = (g.ind_lits(&v), g.ind_lits(&w));
                        g.one_hot_meet(&a, &b)
                    })
                }
            },
            Formula::InSet(a, s) => match (Self::ind_ref(env, a), Self::set_ref(env, s)) {
                (IndRef::Fixed(x), SetRef::Fixed(u)) => bool_g(u.contains(x)),
                (IndRef::Fixed(x), SetRef::Free(v)) => {
                    if x < self.n {
                        G::L(self.set_lits(&v)[x])
                    } else {
                        G::F
                    }
                }
                (IndRef::Free(v), SetRef::Fixed(u)) => {
                    let lits = self.ind_lits(&v);
                    let gs: Vec<G> = u.iter().filter(|&e| e < self.n).map(|e| G::L(lits[e])).collect();
                    self.or(gs)
                }
                (IndRef::Free(v), SetRef::Free(w)) => self.cached((1, v.clone(), w.clone()), |g| {
                    let (a, b) = (g.ind_lits(&v), g.set_lits(&w));
                    g.one_hot_meet(&a, &b)
                }),
            },
            Formula::EqSet(a, b) => match (Self::set_ref(env, a), Self::set_ref(env, b)) {
                (SetRef::Fixed(u), SetRef::Fixed(w)) => bool_g(u == w),
                (SetRef::Fixed(u), SetRef::Free(v)) | (SetRef::Free(v), SetRef::Fixed(u)) => {
                    let s = self.set_lits(&v);
                    self.set_equals(&s, &u)
                }
                (SetRef::Free(v), SetRef::Free(w)) if v == w => G::T,
                (SetRef::Free(v), SetRef::Free(w)) => {
                    let (v, w) = if v < w { (v, w) } else { (w, v) };
                    self.cached((2, v.clone(), w.clone()), |g| {
                        let (a, b) = (g.set_lits(&v), g.set_lits(&w));
                        let parts: Vec<G> = (0..g.n).map(|e| g.iff(G::L(a[e]), G::L(b[e]))).collect();
                        g.and(parts)
                    })
                }
            },
            Formula::InColl(s, a) => match Self::set_ref(env, s) {
                SetRef::Fixed(u) => self.membership(a, &u),
                SetRef::Free(v) => self.cached((3, v.clone(), a.clone()), |g| {
                    let lits = g.set_lits(&v);
                    let subsets = g.subsets().to_vec();
                    let mut options = Vec::with_capacity(subsets.len());
                    for u in &subsets {
                        let eq = g.set_equals(&lits, u);
                        let m = g.membership(a, u);
                        options.push(g.and([eq, m]));
                    }
                    g.or(options)
                }),
            },
            _ => unreachable!("not an atom"),
        }
    }

    fn is_linked(&mut self, outer: &Formula) {
        if let Formula::ForallSet(..) = outer {
            for (o, inner, c) in link_conditions(outer) {
                if std::ptr::eq(o, outer) {
                    let key = inner as *const Formula;
                    if !self.linked.contains_key(&key) {
                        self.linked.insert(key, certify(&c) != Certification::Violated);
                    }
                }
            }
        }
    }

    /// `within`: union of the current set-quantifier instance, used to limit
    /// linked individual quantifiers to tuples inside it.
    fn enc(&mut self, f: &Formula, env: &mut Vec<(Var, Bound)>, within: Option<&ElemSet>) -> G {
        match f {
            Formula::Not(a) => !self.enc(a, env, within),
            Formula::And(a, b) => {
                let x = self.enc(a, env, within);
                if x == G::F {
                    return G::F;
                }
                let y = self.enc(b, env, within);
                self.and([x, y])
            }
            Formula::Or(a, b) => {
                let x = self.enc(a, env, within);
                if x == G::T {
                    return G::T;
                }
                let y = self.enc(b, env, within);
                self.or([x, y])
            }
            Formula::Implies(a, b) => {
                let x = self.enc(a, env, within);
                if x == G::F {
                    return G::T;
                }
                let y = self.enc(b, env, within);
                self.or([!x, y])
            }
            Formula::Iff(a, b) => {
                let x = self.enc(a, env, within);
                let y = self.enc(b, env, within);
                self.iff(x, y)
            }
            Formula::ForallInd(zs, body) => {
                let key = f as *const Formula;
                let range: Vec<usize> = match within {
                    Some(w) if self.linked.get(&key) == Some(&true) => w.iter().filter(|&e| e < self.n).collect(),
                    _ => (0..self.n).collect(),
                };
                if range.is_empty() {
                    return G::T;
                }
                let k = zs.len();
                let base = env.len();
                for z in zs {
                    env.push((z.clone(), Bound::Elem(range[0])));
                }
                let mut idx = vec![0usize; k];
                let mut parts = Vec::new();
                let result = loop {
                    for (i, &j) in idx.iter().enumerate() {
                        env[base + i].1 = Bound::Elem(range[j]);
                    }
                    let top = idx.iter().map(|&j| range[j]).max();
                    let g = self.enc(body, env, within);
                    let gd = self.guard(top);
                    let inst = self.or([!gd, g]);
                    if inst == G::F {
                        break G::F;
                    }
                    parts.push(inst);
                    if !bump(&mut idx, range.len()) {
                        break self.and(parts);
                    }
                };
                env.truncate(base);
                result
            }
            Formula::ForallSet(zs, body) => {
                self.is_linked(f);
                let subsets = self.subsets().to_vec();
                let k = zs.len();
                let base = env.len();
                for z in zs {
                    env.push((z.clone(), Bound::Set(ElemSet::new())));
                }
                let mut idx = vec![0usize; k];
                let mut parts = Vec::new();
                let result = loop {
                    let mut union = ElemSet::new();
                    for (i, &j) in idx.iter().enumerate() {
                        union = union.union(&subsets[j]);
                        env[base + i].1 = Bound::Set(subsets[j].clone());
                    }
                    let g = self.enc(body, env, Some(&union));
                    let gd = self.guard(union.max_elem());
                    let inst = self.or([!gd, g]);
                    if inst == G::F {
                        break G::F;
                    }
                    parts.push(inst);
                    if !bump(&mut idx, subsets.len()) {
                        break self.and(parts);
                    }
                };
                env.truncate(base);
                result
            }
            atom => self.atom(atom, env),
        }
    }

    /// Adds `f` as a constraint. Returns false if it grounds to false.
    pub fn assert(&mut self, f: &Formula) -> bool {
        match self.enc(f, &mut Vec::new(), None) {
            G::T => true,
            G::F => {
                let l = self.new_lit();
                self.clause(&[l]);
                self.clause(&[!l]);
                false
            }
            G::L(l) => {
                self.clause(&[l]);
                true
            }
        }
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        self.stats.solver_calls += 1;
        self.solver.assume(assumptions);
        let sat = self.solver.solve().expect("solver without proof output cannot fail");
        if sat {
            let model = self.solver.model().expect("model after SAT");
            let mut vals = vec![false; self.stats.variables as usize + 1];
            for l in model {
                let i = l.var().index();
                if i >= vals.len() {
                    vals.resize(i + 1, false);
                }
                vals[i] = l.is_positive();
            }
            self.model = vals;
        }
        sat
    }

    fn value(&self, l: Lit) -> bool {
        self.model.get(l.var().index()).copied().unwrap_or(false) == l.is_positive()
    }

    /// Reads the interpretation off the last satisfying assignment.
    pub fn decode(&self) -> Interpretation {
        let size = self.active.iter().take_while(|&&l| self.value(l)).count();
        let mut m = Interpretation::new(size).expect("at least one active element");
        for (v, lits) in &self.inds {
            let e = lits.iter().position(|&l| self.value(l)).expect("one-hot");
            m.set_ind(v.name(), e).expect("active value");
        }
        for (v, lits) in &self.sets {
            let s: ElemSet = (0..size).filter(|&e| self.value(lits[e])).collect();
            m.set_set(v.name(), s).expect("active elements");
        }
        let mut colls: BTreeMap<&Var, BTreeSet<ElemSet>> = self.colls.iter().map(|a| (a, BTreeSet::new())).collect();
        for ((a, u), &l) in &self.memberships {
            if u.within(size) && self.value(l) {
                colls.entry(a).or_default().insert(u.clone());
            }
        }
        for (a, c) in colls {
            m.set_coll(a.name(), c).expect("active elements");
        }
        m
    }
}

fn bool_g(b: bool) -> G {
    if b {
        G::T
    } else {
        G::F
    }
}

fn bump(idx: &mut [usize], n: usize) -> bool {
    for x in idx.iter_mut().rev() {
        *x += 1;
        if *x < n {
            return true;
        }
        *x = 0;
    }
    false
}

/// Outcome of a search for a smallest model of size at most `n`.
pub(crate) struct LeastModel {
    pub model: Option<Interpretation>,
    pub stats: GroundStats,
}

/// Finds a model of the conjunction of `formulas` with as few elements as
/// possible, up to `n`.
pub(crate) fn least_model(formulas: &[Formula], n: usize, universe: Universe) -> LeastModel {
    let mut free = BTreeSet::new();
    for f in formulas {
        free.extend(f.free_vars());
    }
    let mut g = Grounder::new(n, universe, true, &free);
    for f in formulas {
        if !g.assert(f) {
            return LeastModel { model: None, stats: g.stats };
        }
    }
    if !g.solve(&[]) {
        return LeastModel { model: None, stats: g.stats };
    }
    let (mut lo, mut hi) = (1, n);
    let mut best = g.decode();
    hi = hi.min(best.domain_size());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if g.solve(&[g.at_most(mid)]) {
            best = g.decode();
            hi = best.domain_size();
        } else {
            lo = mid + 1;
        }
    }
    LeastModel { model: Some(best), stats: g.stats }
}

/// A model with exactly `n` elements, if any.
pub(crate) fn model_of_size(formulas: &[Formula], n: usize, universe: Universe) -> (Option<Interpretation>, GroundStats) {
    let mut free = BTreeSet::new();
    for f in formulas {
        free.extend(f.free_vars());
    }
    let mut g = Grounder::new(n, universe, true, &free);
    for f in formulas {
        if !g.assert(f) {
            return (None, g.stats);
        }
    }
    let l = g.at_least(n);
    let m = if g.solve(&[l]) { Some(g.decode()) } else { None };
    (m, g.stats)
}
