//! Formula syntax: sorted variables, the formula tree, parsing and rendering.

mod parse;
mod render;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use parse::{parse, parse_document, ParseError, ParseErrorKind};
pub use render::{render, render_document};

/// The three variable sorts: individuals, sets of individuals, collections of sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Individual,
    Set,
    Collection,
}

impl Sort {
    pub const ALL: [Sort; 3] = [Sort::Individual, Sort::Set, Sort::Collection];

    pub fn index(self) -> usize {
        match self {
            Sort::Individual => 0,
            Sort::Set => 1,
            Sort::Collection => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Sort> {
        Sort::ALL.get(i).copied()
    }
}

/// A variable is a name together with its sort.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Self {
        Var { name: Arc::from(name), sort }
    }

    pub fn ind(name: &str) -> Self {
        Self::new(name, Sort::Individual)
    }

    pub fn set(name: &str) -> Self {
        Self::new(name, Sort::Set)
    }

    pub fn coll(name: &str) -> Self {
        Self::new(name, Sort::Collection)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn name_arc(&self) -> &Arc<str> {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    /// The name without any `#k` suffix.
    pub fn stem(&self) -> &str {
        self.name.split('#').next().unwrap_or(&self.name)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.sort.index())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A formula tree.
///
/// `ForallInd` binds individual variables and its body may only contain
/// individual-level atoms. `ForallSet` binds set variables; its body may
/// contain `ForallInd` atoms but no further `ForallSet`. `Implies` and `Iff`
/// are kept as written and expanded by the procedures that need it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// `x = y`
    EqInd(Var, Var),
    /// `x in X`
    InSet(Var, Var),
    /// `X = Y`
    EqSet(Var, Var),
    /// `X in A`
    InColl(Var, Var),
    ForallInd(Vec<Var>, Box<Formula>),
    ForallSet(Vec<Var>, Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("sort mismatch in atom `{0}`")]
    SortMismatch(String),
    #[error("quantifier binds variable `{0}` of the wrong sort")]
    BadBinder(String),
    #[error("empty quantifier prefix")]
    EmptyPrefix,
    #[error("quantifier nesting not allowed: {0}")]
    Nesting(String),
}

impl Formula {
    pub fn eq_ind(x: &Var, y: &Var) -> Self {
        Formula::EqInd(x.clone(), y.clone())
    }

    pub fn in_set(x: &Var, s: &Var) -> Self {
        Formula::InSet(x.clone(), s.clone())
    }

    pub fn eq_set(x: &Var, y: &Var) -> Self {
        Formula::EqSet(x.clone(), y.clone())
    }

    pub fn in_coll(s: &Var, a: &Var) -> Self {
        Formula::InColl(s.clone(), a.clone())
    }

    pub fn forall_ind(vars: Vec<Var>, body: Formula) -> Self {
        Formula::ForallInd(vars, Box::new(body))
    }

    pub fn forall_set(vars: Vec<Var>, body: Formula) -> Self {
        Formula::ForallSet(vars, Box::new(body))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `None` for an empty sequence.
    pub fn and_all(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        fs.into_iter().reduce(Formula::and)
    }

    /// Left-nested disjunction; `None` for an empty sequence.
    pub fn or_all(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        fs.into_iter().reduce(Formula::or)
    }

    /// An always-false individual atom `!(x = x)`.
    pub fn falsum_on(x: &Var) -> Formula {
        Formula::not(Formula::eq_ind(x, x))
    }

    pub fn is_flat_atom(&self) -> bool {
        matches!(
            self,
            Formula::EqInd(..) | Formula::InSet(..) | Formula::EqSet(..) | Formula::InColl(..)
        )
    }

    pub fn is_quantified(&self) -> bool {
        matches!(self, Formula::ForallInd(..) | Formula::ForallSet(..))
    }

    pub fn is_atom(&self) -> bool {
        self.is_flat_atom() || self.is_quantified()
    }

    /// Atom level: 0 for individual atoms, 1 for set atoms and individual
    /// quantifiers, 2 for set quantifiers. `None` for connectives.
    pub fn level(&self) -> Option<u8> {
        match self {
            Formula::EqInd(..) | Formula::InSet(..) => Some(0),
            Formula::EqSet(..) | Formula::InColl(..) | Formula::ForallInd(..) => Some(1),
            Formula::ForallSet(..) => Some(2),
            _ => None,
        }
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::ForallInd(_, b) | Formula::ForallSet(_, b) | Formula::Not(b) => vec![b],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                vec![a, b]
            }
            _ => vec![],
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Formula)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    fn atom_vars(&self) -> Option<[&Var; 2]> {
        match self {
            Formula::EqInd(a, b) | Formula::InSet(a, b) | Formula::EqSet(a, b) | Formula::InColl(a, b) => {
                Some([a, b])
            }
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a Var>, out: &mut BTreeSet<Var>) {
        if let Some(vs) = self.atom_vars() {
            for v in vs {
                if !bound.contains(&v) {
                    out.insert(v.clone());
                }
            }
            return;
        }
        match self {
            Formula::ForallInd(vs, b) | Formula::ForallSet(vs, b) => {
                let k = bound.len();
                bound.extend(vs.iter());
                b.collect_free(bound, out);
                bound.truncate(k);
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Every variable occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Some(vs) = f.atom_vars() {
                out.extend(vs.into_iter().cloned());
            }
            if let Formula::ForallInd(vs, _) | Formula::ForallSet(vs, _) = f {
                out.extend(vs.iter().cloned());
            }
        });
        out
    }

    /// Replaces free occurrences of variables according to `map`.
    ///
    /// Binders shadow the map. Callers must make sure no substituted variable
    /// is captured, which holds whenever the replacements are fresh or of a
    /// sort the enclosing quantifiers do not bind.
    pub fn substitute(&self, map: &HashMap<Var, Var>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        let s = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::EqInd(a, b) => Formula::EqInd(s(a), s(b)),
            Formula::InSet(a, b) => Formula::InSet(s(a), s(b)),
            Formula::EqSet(a, b) => Formula::EqSet(s(a), s(b)),
            Formula::InColl(a, b) => Formula::InColl(s(a), s(b)),
            Formula::ForallInd(vs, b) | Formula::ForallSet(vs, b) => {
                let inner: HashMap<Var, Var> = map
                    .iter()
                    .filter(|(k, _)| !vs.contains(k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                let body = Box::new(b.substitute(&inner));
                if matches!(self, Formula::ForallInd(..)) {
                    Formula::ForallInd(vs.clone(), body)
                } else {
                    Formula::ForallSet(vs.clone(), body)
                }
            }
            Formula::Not(a) => Formula::not(a.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Implies(a, b) => Formula::implies(a.substitute(map), b.substitute(map)),
            Formula::Iff(a, b) => Formula::iff(a.substitute(map), b.substitute(map)),
        }
    }

    /// Checks sorts of atoms and binders and the quantifier nesting discipline.
    pub fn check(&self) -> Result<(), FormulaError> {
        self.check_in(0)
    }

    // depth: 0 outside quantifiers, 1 inside a set quantifier, 2 inside an
    // individual quantifier.
    fn check_in(&self, depth: u8) -> Result<(), FormulaError> {
        use Sort::*;
        let bad = || FormulaError::SortMismatch(render(self));
        match self {
            Formula::EqInd(a, b) => ok_if(a.sort == Individual && b.sort == Individual, bad),
            Formula::InSet(a, b) => ok_if(a.sort == Individual && b.sort == Set, bad),
            Formula::EqSet(a, b) | Formula::InColl(a, b) if depth == 2 => {
                let _ = (a, b);
                Err(FormulaError::Nesting(format!(
                    "set-level atom `{}` inside an individual quantifier",
                    render(self)
                )))
            }
            Formula::EqSet(a, b) => ok_if(a.sort == Set && b.sort == Set, bad),
            Formula::InColl(a, b) => ok_if(a.sort == Set && b.sort == Collection, bad),
            Formula::ForallInd(vs, b) => {
                check_binders(vs, Individual)?;
                if depth == 2 {
                    return Err(FormulaError::Nesting(
                        "individual quantifier inside an individual quantifier".into(),
                    ));
                }
                b.check_in(2)
            }
            Formula::ForallSet(vs, b) => {
                check_binders(vs, Set)?;
                if depth != 0 {
                    return Err(FormulaError::Nesting(
                        "set quantifier inside another quantifier".into(),
                    ));
                }
                b.check_in(1)
            }
            _ => self.children().into_iter().try_for_each(|c| c.check_in(depth)),
        }
    }

    /// Rewrites `Implies` and `Iff` into `Not`/`And`/`Or` everywhere.
    pub fn expand_sugar(&self) -> Formula {
        match self {
            Formula::Implies(a, b) => Formula::or(Formula::not(a.expand_sugar()), b.expand_sugar()),
            Formula::Iff(a, b) => {
                let (a, b) = (a.expand_sugar(), b.expand_sugar());
                Formula::and(
                    Formula::or(Formula::not(a.clone()), b.clone()),
                    Formula::or(a, Formula::not(b)),
                )
            }
            Formula::ForallInd(vs, b) => Formula::forall_ind(vs.clone(), b.expand_sugar()),
            Formula::ForallSet(vs, b) => Formula::forall_set(vs.clone(), b.expand_sugar()),
            Formula::Not(a) => Formula::not(a.expand_sugar()),
            Formula::And(a, b) => Formula::and(a.expand_sugar(), b.expand_sugar()),
            Formula::Or(a, b) => Formula::or(a.expand_sugar(), b.expand_sugar()),
            atom => atom.clone(),
        }
    }

    /// Splits nested top-level `And` nodes into a list of conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::And(a, b) = f {
                go(a, out);
                go(b, out);
            } else {
                out.push(f);
            }
        }
        go(self, &mut out);
        out
    }

    /// Splits nested top-level `Or` nodes into a list of disjuncts.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::Or(a, b) = f {
                go(a, out);
                go(b, out);
            } else {
                out.push(f);
            }
        }
        go(self, &mut out);
        out
    }
}

fn ok_if(c: bool, e: impl FnOnce() -> FormulaError) -> Result<(), FormulaError> {
    if c {
        Ok(())
    } else {
        Err(e())
    }
}

fn check_binders(vs: &[Var], sort: Sort) -> Result<(), FormulaError> {
    if vs.is_empty() {
        return Err(FormulaError::EmptyPrefix);
    }
    for v in vs {
        if v.sort != sort {
            return Err(FormulaError::BadBinder(v.name().to_string()));
        }
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Generator of variable names not yet in use, of the form `stem#k`.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: HashSet<Arc<str>>,
    next: usize,
}

impl FreshNames {
    /// Reserves every name occurring in `f`.
    pub fn for_formula(f: &Formula) -> Self {
        let mut fresh = FreshNames::default();
        fresh.reserve_formula(f);
        fresh
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        for v in f.all_vars() {
            self.reserve(&v);
        }
    }

    pub fn reserve(&mut self, v: &Var) {
        if let Some((_, k)) = v.name().rsplit_once('#') {
            if let Ok(k) = k.parse::<usize>() {
                self.next = self.next.max(k + 1);
            }
        }
        self.used.insert(v.name.clone());
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// A new variable of the same sort as `base`, named after its stem.
    pub fn fresh_like(&mut self, base: &Var) -> Var {
        self.fresh(base.stem(), base.sort)
    }

    pub fn fresh(&mut self, stem: &str, sort: Sort) -> Var {
        self.next = self.next.max(1);
        loop {
            let name = format!("{stem}#{}", self.next);
            self.next += 1;
            if !self.used.contains(name.as_str()) {
                let v = Var::new(&name, sort);
                self.used.insert(v.name.clone());
                return v;
            }
        }
    }
}

/// Renames bound variables so that no variable is bound twice and no bound
/// variable also occurs free. The first binding occurrence of a name (in
/// pre-order) keeps it. Idempotent.
pub fn rename_apart(f: &Formula) -> Formula {
    let mut fresh = FreshNames::for_formula(f);
    let mut taken: HashSet<Var> = f.free_vars().into_iter().collect();
    rename_in(f, &HashMap::new(), &mut taken, &mut fresh)
}

fn rename_in(
    f: &Formula,
    map: &HashMap<Var, Var>,
    taken: &mut HashSet<Var>,
    fresh: &mut FreshNames,
) -> Formula {
    let s = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
    match f {
        Formula::EqInd(a, b) => Formula::EqInd(s(a), s(b)),
        Formula::InSet(a, b) => Formula::InSet(s(a), s(b)),
        Formula::EqSet(a, b) => Formula::EqSet(s(a), s(b)),
        Formula::InColl(a, b) => Formula::InColl(s(a), s(b)),
        Formula::ForallInd(vs, b) | Formula::ForallSet(vs, b) => {
            let mut inner = map.clone();
            let mut new_vs = Vec::with_capacity(vs.len());
            for v in vs {
                let nv = if taken.contains(v) { fresh.fresh_like(v) } else { v.clone() };
                taken.insert(nv.clone());
                inner.insert(v.clone(), nv.clone());
                new_vs.push(nv);
            }
            let body = Box::new(rename_in(b, &inner, taken, fresh));
            if matches!(f, Formula::ForallInd(..)) {
                Formula::ForallInd(new_vs, body)
            } else {
                Formula::ForallSet(new_vs, body)
            }
        }
        Formula::Not(a) => Formula::not(rename_in(a, map, taken, fresh)),
        Formula::And(a, b) => {
            Formula::and(rename_in(a, map, taken, fresh), rename_in(b, map, taken, fresh))
        }
        Formula::Or(a, b) => Formula::or(rename_in(a, map, taken, fresh), rename_in(b, map, taken, fresh)),
        Formula::Implies(a, b) => {
            Formula::implies(rename_in(a, map, taken, fresh), rename_in(b, map, taken, fresh))
        }
        Formula::Iff(a, b) => Formula::iff(rename_in(a, map, taken, fresh), rename_in(b, map, taken, fresh)),
    }
}

/// Variables of a formula by sort, split into free and bound.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarInventory {
    free: [BTreeSet<Var>; 3],
    bound: [BTreeSet<Var>; 3],
}

impl VarInventory {
    pub fn free(&self, sort: Sort) -> &BTreeSet<Var> {
        &self.free[sort.index()]
    }

    pub fn bound(&self, sort: Sort) -> &BTreeSet<Var> {
        &self.bound[sort.index()]
    }

    pub fn all(&self, sort: Sort) -> BTreeSet<Var> {
        self.free(sort).union(self.bound(sort)).cloned().collect()
    }
}

pub fn inventory(f: &Formula) -> VarInventory {
    let mut inv = VarInventory::default();
    for v in f.free_vars() {
        inv.free[v.sort.index()].insert(v);
    }
    f.walk(&mut |g| {
        if let Formula::ForallInd(vs, _) | Formula::ForallSet(vs, _) = g {
            for v in vs {
                inv.bound[v.sort.index()].insert(v.clone());
            }
        }
    });
    inv
}
