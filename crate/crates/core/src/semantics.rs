//! Finite interpretations and the truth relation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elemset::ElemSet;
use crate::formulas::{Formula, Sort, Var};

/// Largest domain over which set quantifiers are evaluated by enumeration.
pub const SET_QUANTIFIER_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("domain must be non-empty")]
    EmptyDomain,
    #[error("element {elem} outside domain of size {size}")]
    OutOfDomain { elem: usize, size: usize },
    #[error("variable `{0}` is not interpreted")]
    Unassigned(String),
    #[error("value for `{0}` has the wrong sort")]
    WrongSort(String),
    #[error("set quantifier over a domain of size {0} is too large to enumerate")]
    DomainTooLarge(usize),
}

/// A value of one of the three sorts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Elem(usize),
    Set(ElemSet),
    Coll(BTreeSet<ElemSet>),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Elem(_) => Sort::Individual,
            Value::Set(_) => Sort::Set,
            Value::Coll(_) => Sort::Collection,
        }
    }
}

/// A finite domain `{0, ..., n-1}` with values for variables of each sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    domain_size: usize,
    inds: BTreeMap<Arc<str>, usize>,
    sets: BTreeMap<Arc<str>, ElemSet>,
    colls: BTreeMap<Arc<str>, BTreeSet<ElemSet>>,
}

impl Interpretation {
    pub fn new(domain_size: usize) -> Result<Self, SemanticsError> {
        if domain_size == 0 {
            return Err(SemanticsError::EmptyDomain);
        }
        Ok(Interpretation {
            domain_size,
            inds: BTreeMap::new(),
            sets: BTreeMap::new(),
            colls: BTreeMap::new(),
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    fn check_elem(&self, e: usize) -> Result<(), SemanticsError> {
        if e < self.domain_size {
            Ok(())
        } else {
            Err(SemanticsError::OutOfDomain { elem: e, size: self.domain_size })
        }
    }

    fn check_set(&self, s: &ElemSet) -> Result<(), SemanticsError> {
        match s.max_elem() {
            Some(m) => self.check_elem(m),
            None => Ok(()),
        }
    }

    pub fn set_ind(&mut self, name: &str, e: usize) -> Result<(), SemanticsError> {
        self.check_elem(e)?;
        self.inds.insert(Arc::from(name), e);
        Ok(())
    }

    pub fn set_set(&mut self, name: &str, s: ElemSet) -> Result<(), SemanticsError> {
        self.check_set(&s)?;
        self.sets.insert(Arc::from(name), s);
        Ok(())
    }

    pub fn set_coll(&mut self, name: &str, c: BTreeSet<ElemSet>) -> Result<(), SemanticsError> {
        for s in &c {
            self.check_set(s)?;
        }
        self.colls.insert(Arc::from(name), c);
        Ok(())
    }

    /// Assigns a value to a variable, checking sort and domain.
    pub fn assign(&mut self, v: &Var, value: Value) -> Result<(), SemanticsError> {
        if value.sort() != v.sort() {
            return Err(SemanticsError::WrongSort(v.name().to_string()));
        }
        match value {
            Value::Elem(e) => self.set_ind(v.name(), e),
            Value::Set(s) => self.set_set(v.name(), s),
            Value::Coll(c) => self.set_coll(v.name(), c),
        }
    }

    pub fn ind(&self, name: &str) -> Option<usize> {
        self.inds.get(name).copied()
    }

    pub fn set(&self, name: &str) -> Option<&ElemSet> {
        self.sets.get(name)
    }

    pub fn coll(&self, name: &str) -> Option<&BTreeSet<ElemSet>> {
        self.colls.get(name)
    }

    pub fn value(&self, v: &Var) -> Option<Value> {
        match v.sort() {
            Sort::Individual => self.ind(v.name()).map(Value::Elem),
            Sort::Set => self.set(v.name()).cloned().map(Value::Set),
            Sort::Collection => self.coll(v.name()).cloned().map(Value::Coll),
        }
    }

    pub fn inds(&self) -> impl Iterator<Item = (&str, usize)> {
        self.inds.iter().map(|(k, v)| (&**k, *v))
    }

    pub fn sets(&self) -> impl Iterator<Item = (&str, &ElemSet)> {
        self.sets.iter().map(|(k, v)| (&**k, v))
    }

    pub fn colls(&self) -> impl Iterator<Item = (&str, &BTreeSet<ElemSet>)> {
        self.colls.iter().map(|(k, v)| (&**k, v))
    }

    /// Gives every listed variable without a value a default: element 0,
    /// the empty set, the empty collection.
    pub fn complete_for<'a>(&mut self, vars: impl IntoIterator<Item = &'a Var>) {
        for v in vars {
            if self.value(v).is_some() {
                continue;
            }
            let name: Arc<str> = v.name_arc().clone();
            match v.sort() {
                Sort::Individual => {
                    self.inds.insert(name, 0);
                }
                Sort::Set => {
                    self.sets.insert(name, ElemSet::new());
                }
                Sort::Collection => {
                    self.colls.insert(name, BTreeSet::new());
                }
            }
        }
    }

    /// Drops values for variables not in `keep`.
    pub fn restrict_to(&mut self, keep: &BTreeSet<Var>) {
        let has = |name: &str, s: Sort| keep.contains(&Var::new(name, s));
        self.inds.retain(|k, _| has(k, Sort::Individual));
        self.sets.retain(|k, _| has(k, Sort::Set));
        self.colls.retain(|k, _| has(k, Sort::Collection));
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InterpretationJson::from(self)).expect("interpretation serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        let raw: InterpretationJson = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        raw.try_into().map_err(|e: SemanticsError| e.to_string())
    }
}

/// Wire format: collections are lexicographically sorted arrays of sorted
/// element arrays.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpretationJson {
    domain_size: usize,
    #[serde(default)]
    m0: BTreeMap<String, usize>,
    #[serde(default)]
    m1: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    m2: BTreeMap<String, Vec<Vec<usize>>>,
}

impl From<&Interpretation> for InterpretationJson {
    fn from(m: &Interpretation) -> Self {
        InterpretationJson {
            domain_size: m.domain_size,
            m0: m.inds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            m1: m.sets.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect(),
            m2: m
                .colls
                .iter()
                .map(|(k, c)| {
                    let mut sets: Vec<Vec<usize>> = c.iter().map(|s| s.to_vec()).collect();
                    sets.sort();
                    (k.to_string(), sets)
                })
                .collect(),
        }
    }
}

impl TryFrom<InterpretationJson> for Interpretation {
    type Error = SemanticsError;

    fn try_from(raw: InterpretationJson) -> Result<Self, SemanticsError> {
        let mut m = Interpretation::new(raw.domain_size)?;
        for (k, v) in raw.m0 {
            m.set_ind(&k, v)?;
        }
        for (k, v) in raw.m1 {
            m.set_set(&k, v.into_iter().collect())?;
        }
        for (k, v) in raw.m2 {
            m.set_coll(&k, v.into_iter().map(|s| s.into_iter().collect()).collect())?;
        }
        Ok(m)
    }
}

/// Overrides of variable values, applied on top of an interpretation.
#[derive(Clone, Debug, Default)]
pub struct Rebinding {
    pub overrides: Vec<(Var, Value)>,
}

impl Rebinding {
    pub fn with(mut self, v: &Var, value: Value) -> Self {
        self.overrides.push((v.clone(), value));
        self
    }
}

/// A copy of `m` with the overrides applied.
pub fn rebind(m: &Interpretation, r: &Rebinding) -> Result<Interpretation, SemanticsError> {
    let mut out = m.clone();
    for (v, val) in &r.overrides {
        out.assign(v, val.clone())?;
    }
    Ok(out)
}

struct Env<'a> {
    m: &'a Interpretation,
    inds: Vec<(&'a Var, usize)>,
    sets: Vec<(&'a Var, ElemSet)>,
    base_sets: Vec<(&'a Var, ElemSet)>,
}

impl<'a> Env<'a> {
    fn ind(&self, v: &Var) -> Result<usize, SemanticsError> {
        if let Some((_, e)) = self.inds.iter().rev().find(|(w, _)| *w == v) {
            return Ok(*e);
        }
        self.m.ind(v.name()).ok_or_else(|| SemanticsError::Unassigned(v.name().into()))
    }

    fn set(&self, v: &Var) -> Result<&ElemSet, SemanticsError> {
        if let Some((_, s)) = self.sets.iter().rev().find(|(w, _)| *w == v) {
            return Ok(s);
        }
        if let Some((_, s)) = self.base_sets.iter().rev().find(|(w, _)| *w == v) {
            return Ok(s);
        }
        self.m.set(v.name()).ok_or_else(|| SemanticsError::Unassigned(v.name().into()))
    }

    fn coll(&self, v: &Var) -> Result<&BTreeSet<ElemSet>, SemanticsError> {
        self.m.coll(v.name()).ok_or_else(|| SemanticsError::Unassigned(v.name().into()))
    }

    fn eval(&mut self, f: &'a Formula) -> Result<bool, SemanticsError> {
        Ok(match f {
            Formula::EqInd(a, b) => self.ind(a)? == self.ind(b)?,
            Formula::InSet(a, b) => {
                let e = self.ind(a)?;
                self.set(b)?.contains(e)
            }
            Formula::EqSet(a, b) => self.set(a)? == self.set(b)?,
            Formula::InColl(a, b) => {
                let s = self.set(a)?.clone();
                self.coll(b)?.contains(&s)
            }
            Formula::Not(a) => !self.eval(a)?,
            Formula::And(a, b) => self.eval(a)? && self.eval(b)?,
            Formula::Or(a, b) => self.eval(a)? || self.eval(b)?,
            Formula::Implies(a, b) => !self.eval(a)? || self.eval(b)?,
            Formula::Iff(a, b) => self.eval(a)? == self.eval(b)?,
            Formula::ForallInd(vs, body) => {
                let n = self.m.domain_size;
                let k = self.inds.len();
                for v in vs {
                    self.inds.push((v, 0));
                }
                let res = loop {
                    if !self.eval(body)? {
                        break false;
                    }
                    if !odometer(&mut self.inds[k..], n) {
                        break true;
                    }
                };
                self.inds.truncate(k);
                res
            }
            Formula::ForallSet(vs, body) => {
                let n = self.m.domain_size;
                if n > SET_QUANTIFIER_LIMIT {
                    return Err(SemanticsError::DomainTooLarge(n));
                }
                let k = self.sets.len();
                let mut masks = vec![0u64; vs.len()];
                for v in vs {
                    self.sets.push((v, ElemSet::new()));
                }
                let res = loop {
                    for (i, m) in masks.iter().enumerate() {
                        self.sets[k + i].1 = ElemSet::from_mask(*m);
                    }
                    if !self.eval(body)? {
                        break false;
                    }
                    if !mask_odometer(&mut masks, 1u64 << n) {
                        break true;
                    }
                };
                self.sets.truncate(k);
                res
            }
        })
    }
}

fn odometer(slots: &mut [(&Var, usize)], n: usize) -> bool {
    for slot in slots.iter_mut().rev() {
        slot.1 += 1;
        if slot.1 < n {
            return true;
        }
        slot.1 = 0;
    }
    false
}

fn mask_odometer(masks: &mut [u64], limit: u64) -> bool {
    for m in masks.iter_mut().rev() {
        *m += 1;
        if *m < limit {
            return true;
        }
        *m = 0;
    }
    false
}

/// Truth of `f` in `m`. Every free variable of `f` must have a value.
pub fn evaluate(m: &Interpretation, f: &Formula) -> Result<bool, SemanticsError> {
    Env { m, inds: Vec::new(), sets: Vec::new(), base_sets: Vec::new() }.eval(f)
}

/// Truth of `f` in `m` with individual and set variables rebound, without
/// copying `m`.
pub fn evaluate_under(
    m: &Interpretation,
    inds: &[(Var, usize)],
    sets: &[(Var, ElemSet)],
    f: &Formula,
) -> Result<bool, SemanticsError> {
    for (_, e) in inds {
        m.check_elem(*e)?;
    }
    let mut env = Env {
        m,
        inds: inds.iter().map(|(v, e)| (v, *e)).collect(),
        sets: Vec::new(),
        base_sets: sets.iter().map(|(v, s)| (v, s.clone())).collect(),
    };
    env.eval(f)
}
