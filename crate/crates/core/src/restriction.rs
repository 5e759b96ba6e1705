//! The link condition on individual quantifiers nested inside set quantifiers.
//!
//! For `(forall Z1..Zm)( ... (forall z1..zn) body ... )` the formula
//! `!body -> AND_i OR_j zi in Zj` must be valid: any tuple falsifying the inner
//! body lies inside the union of the outer sets. Validity is decided over the
//! quantifier-free fragment with `=` and `in` between individuals and sets.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::formulas::{render, Formula, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RestrictionError {
    #[error("formula is not quantifier-free: `{0}`")]
    Quantified(String),
    #[error("atom `{0}` is outside the individual/set membership fragment")]
    UnsupportedAtom(String),
}

/// One individual quantifier nested in a set quantifier.
#[derive(Clone, Debug)]
pub struct LinkCondition {
    pub outer_bound: Vec<Var>,
    pub inner_bound: Vec<Var>,
    pub inner_body: Formula,
}

impl LinkCondition {
    /// `AND_i OR_j zi in Zj`.
    pub fn link_conjunction(&self) -> Formula {
        link_conjunction(&self.inner_bound, &self.outer_bound)
    }

    /// `!body -> link_conjunction`.
    pub fn condition(&self) -> Formula {
        Formula::implies(Formula::not(self.inner_body.clone()), self.link_conjunction())
    }
}

pub fn link_conjunction(inner: &[Var], outer: &[Var]) -> Formula {
    Formula::and_all(inner.iter().map(|z| {
        Formula::or_all(outer.iter().map(|s| Formula::in_set(z, s))).expect("non-empty outer prefix")
    }))
    .expect("non-empty inner prefix")
}

/// Members of an `And` tree as a multiset-insensitive set.
fn and_set(f: &Formula) -> BTreeSet<Formula> {
    f.conjuncts().into_iter().map(|c| or_normal(c)).collect()
}

fn or_normal(f: &Formula) -> Formula {
    let ds: BTreeSet<&Formula> = f.disjuncts().into_iter().collect();
    Formula::or_all(ds.into_iter().cloned()).expect("non-empty")
}

/// True when the inner body has the shape `link_conjunction -> B` (up to the
/// order of conjuncts and disjuncts), which makes the condition a tautology.
pub fn schema_fast_path(c: &LinkCondition) -> bool {
    match &c.inner_body {
        Formula::Implies(l, _) => and_set(l) == and_set(&c.link_conjunction()),
        Formula::Or(..) => {
            // `!L | B` with the negated conjunction as one disjunct.
            c.inner_body.disjuncts().iter().any(|d| match d {
                Formula::Not(l) => and_set(l) == and_set(&c.link_conjunction()),
                _ => false,
            })
        }
        _ => false,
    }
}

/// Decides validity of a quantifier-free formula built from `x = y` and
/// `x in X` atoms.
///
/// Models are abstracted by the partition the individual variables induce and
/// by which classes belong to which sets; every such abstraction is realized
/// by some interpretation, and truth depends on nothing else.
pub fn decide_qf_2ls_validity(f: &Formula) -> Result<bool, RestrictionError> {
    let mut inds: BTreeSet<Var> = BTreeSet::new();
    let mut mems: BTreeSet<(Var, Var)> = BTreeSet::new();
    let mut bad = None;
    f.walk(&mut |g| match g {
        Formula::EqInd(a, b) => {
            inds.insert(a.clone());
            inds.insert(b.clone());
        }
        Formula::InSet(a, s) => {
            inds.insert(a.clone());
            mems.insert((a.clone(), s.clone()));
        }
        Formula::EqSet(..) | Formula::InColl(..) => {
            bad.get_or_insert(RestrictionError::UnsupportedAtom(render(g)));
        }
        Formula::ForallInd(..) | Formula::ForallSet(..) => {
            bad.get_or_insert(RestrictionError::Quantified(render(g)));
        }
        _ => {}
    });
    if let Some(e) = bad {
        return Err(e);
    }
    let inds: Vec<Var> = inds.into_iter().collect();
    let index: HashMap<&Var, usize> = inds.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut class = vec![0usize; inds.len()];
    loop {
        // Distinct (class, set) membership facts under this partition.
        let facts: BTreeSet<(usize, &Var)> = mems.iter().map(|(x, s)| (class[index[x]], s)).collect();
        let facts: Vec<(usize, &Var)> = facts.into_iter().collect();
        let slot: HashMap<(usize, &Var), usize> = facts.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        for bits in 0u64..(1u64 << facts.len()) {
            let holds = eval_qf(f, &|a, b| class[index[a]] == class[index[b]], &|x, s| {
                bits & (1 << slot[&(class[index[x]], s)]) != 0
            });
            if !holds {
                return Ok(false);
            }
        }
        if !next_partition(&mut class) {
            return Ok(true);
        }
    }
}

fn eval_qf(f: &Formula, eq: &dyn Fn(&Var, &Var) -> bool, mem: &dyn Fn(&Var, &Var) -> bool) -> bool {
    match f {
        Formula::EqInd(a, b) => eq(a, b),
        Formula::InSet(a, b) => mem(a, b),
        Formula::Not(a) => !eval_qf(a, eq, mem),
        Formula::And(a, b) => eval_qf(a, eq, mem) && eval_qf(b, eq, mem),
        Formula::Or(a, b) => eval_qf(a, eq, mem) || eval_qf(b, eq, mem),
        Formula::Implies(a, b) => !eval_qf(a, eq, mem) || eval_qf(b, eq, mem),
        Formula::Iff(a, b) => eval_qf(a, eq, mem) == eval_qf(b, eq, mem),
        _ => unreachable!("checked quantifier-free"),
    }
}

/// Next restricted growth string; false after the last one.
fn next_partition(rgs: &mut [usize]) -> bool {
    for i in (1..rgs.len()).rev() {
        let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
        if rgs[i] <= max_prefix {
            rgs[i] += 1;
            for r in rgs[i + 1..].iter_mut() {
                *r = 0;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Discharged syntactically by the `L -> B` shape.
    Schema,
    /// Proven valid by the quantifier-free decision procedure.
    Decided,
    Violated,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkEntry {
    pub outer_atom: String,
    pub inner_atom: String,
    pub condition: String,
    pub verdict: Certification,
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionReport {
    pub member: bool,
    pub entries: Vec<LinkEntry>,
}

impl RestrictionReport {
    pub fn violations(&self) -> impl Iterator<Item = &LinkEntry> {
        self.entries.iter().filter(|e| e.verdict == Certification::Violated)
    }
}

/// Every individual quantifier nested in a set quantifier of `f`.
pub fn link_conditions(f: &Formula) -> Vec<(&Formula, &Formula, LinkCondition)> {
    let mut out = Vec::new();
    f.walk(&mut |g| {
        if let Formula::ForallSet(outer, body) = g {
            body.walk(&mut |h| {
                if let Formula::ForallInd(inner, ib) = h {
                    out.push((
                        g,
                        h,
                        LinkCondition {
                            outer_bound: outer.clone(),
                            inner_bound: inner.clone(),
                            inner_body: (**ib).clone(),
                        },
                    ));
                }
            });
        }
    });
    out
}

/// Checks one link condition: schema first, then the decision procedure.
pub fn certify(c: &LinkCondition) -> Certification {
    if schema_fast_path(c) {
        return Certification::Schema;
    }
    match decide_qf_2ls_validity(&c.condition()) {
        Ok(true) => Certification::Decided,
        _ => Certification::Violated,
    }
}

/// Checks the link condition for every nested quantifier, regardless of the
/// polarity at which it occurs.
pub fn is_3lqsr(f: &Formula) -> RestrictionReport {
    let entries: Vec<LinkEntry> = link_conditions(f)
        .into_iter()
        .map(|(outer, inner, c)| LinkEntry {
            outer_atom: render(outer),
            inner_atom: render(inner),
            condition: render(&c.condition()),
            verdict: certify(&c),
        })
        .collect();
    RestrictionReport { member: entries.iter().all(|e| e.verdict != Certification::Violated), entries }
}
