//! Reduction of a formula to a disjunction of normalized conjunctions.
//!
//! A normalized conjunction contains flat literals (`x = y`, `x in X`,
//! `X = Y`, `X in A` or their negations), positive individual quantifiers and
//! positive set quantifiers. Negated quantifiers are replaced by instances on
//! fresh variables, which preserves satisfiability.

use std::collections::HashMap;

use serde::Serialize;

use crate::formulas::{inventory, rename_apart, render, Formula, FreshNames, Var, VarInventory};
use crate::restriction::is_3lqsr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Formula(#[from] crate::formulas::FormulaError),
    #[error("link condition violated for `{0}`")]
    NotRestricted(String),
    #[error("more than {0} disjuncts")]
    TooManyDisjuncts(usize),
}

/// An atom with a polarity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedAtom {
    pub atom: Formula,
    pub positive: bool,
}

impl SignedAtom {
    pub fn to_formula(&self) -> Formula {
        if self.positive {
            self.atom.clone()
        } else {
            Formula::not(self.atom.clone())
        }
    }

    fn complement(&self) -> SignedAtom {
        SignedAtom { atom: self.atom.clone(), positive: !self.positive }
    }
}

/// One individual quantifier occurring in the body of a set quantifier,
/// recorded with the variables that set quantifier binds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedQuantifier {
    pub atom: Formula,
    pub set_args: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedConjunction {
    pub literals: Vec<SignedAtom>,
    /// Individual quantifiers nested in the positive set quantifiers.
    pub nested: Vec<NestedQuantifier>,
    pub inventory: VarInventory,
}

impl NormalizedConjunction {
    fn new(mut literals: Vec<SignedAtom>) -> Self {
        literals.sort();
        literals.dedup();
        let f = conj_formula(&literals);
        let mut nested = Vec::new();
        for l in &literals {
            if let Formula::ForallSet(zs, body) = &l.atom {
                body.walk(&mut |g| {
                    if matches!(g, Formula::ForallInd(..))
                        && !nested.iter().any(|n: &NestedQuantifier| n.atom == *g && n.set_args == *zs)
                    {
                        nested.push(NestedQuantifier { atom: g.clone(), set_args: zs.clone() });
                    }
                });
            }
        }
        NormalizedConjunction { literals, nested, inventory: inventory(&f) }
    }

    pub fn to_formula(&self) -> Formula {
        conj_formula(&self.literals)
    }

    /// Longest set quantifier prefix.
    pub fn max_set_prefix(&self) -> usize {
        self.nested.iter().map(|n| n.set_args.len()).max().unwrap_or(0)
    }

    /// Longest prefix among nested individual quantifiers.
    pub fn max_nested_prefix(&self) -> usize {
        self.nested
            .iter()
            .map(|n| match &n.atom {
                Formula::ForallInd(zs, _) => zs.len(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Nested {
            atom: String,
            set_args: Vec<String>,
        }
        serde_json::json!({
            "formula": render(&self.to_formula()),
            "literals": self.literals.iter().map(|l| render(&l.to_formula())).collect::<Vec<_>>(),
            "nested": self.nested.iter().map(|n| Nested {
                atom: render(&n.atom),
                set_args: n.set_args.iter().map(|v| v.name().to_string()).collect(),
            }).collect::<Vec<_>>(),
        })
    }
}

fn conj_formula(literals: &[SignedAtom]) -> Formula {
    Formula::and_all(literals.iter().map(SignedAtom::to_formula)).expect("conjunction has a literal")
}

#[derive(Clone, Debug, Default)]
pub struct NormalizeOptions {
    pub max_disjuncts: Option<usize>,
}

type Dnf = Vec<Vec<SignedAtom>>;

/// Disjunctive normal form over atoms, treating quantified atoms as opaque.
/// Contradictory conjunctions are dropped and literals deduplicated.
pub fn to_dnf(f: &Formula, cap: Option<usize>) -> Result<Dnf, NormalizeError> {
    let mut out = dnf(f, true, cap)?;
    for c in out.iter_mut() {
        c.sort();
        c.dedup();
    }
    out.retain(|c| !contradictory(c));
    out.dedup();
    Ok(out)
}

fn contradictory(c: &[SignedAtom]) -> bool {
    c.iter().any(|l| !l.positive && c.contains(&l.complement()))
}

fn check_cap(n: usize, cap: Option<usize>) -> Result<(), NormalizeError> {
    match cap {
        Some(c) if n > c => Err(NormalizeError::TooManyDisjuncts(c)),
        _ => Ok(()),
    }
}

fn product(a: Dnf, b: Dnf, cap: Option<usize>) -> Result<Dnf, NormalizeError> {
    check_cap(a.len().saturating_mul(b.len()), cap)?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut c = x.clone();
            c.extend(y.iter().cloned());
            c.sort();
            c.dedup();
            if !contradictory(&c) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn union(mut a: Dnf, b: Dnf, cap: Option<usize>) -> Result<Dnf, NormalizeError> {
    a.extend(b);
    check_cap(a.len(), cap)?;
    Ok(a)
}

fn dnf(f: &Formula, pos: bool, cap: Option<usize>) -> Result<Dnf, NormalizeError> {
    match f {
        Formula::Not(a) => dnf(a, !pos, cap),
        Formula::And(a, b) if pos => product(dnf(a, true, cap)?, dnf(b, true, cap)?, cap),
        Formula::And(a, b) => union(dnf(a, false, cap)?, dnf(b, false, cap)?, cap),
        Formula::Or(a, b) if pos => union(dnf(a, true, cap)?, dnf(b, true, cap)?, cap),
        Formula::Or(a, b) => product(dnf(a, false, cap)?, dnf(b, false, cap)?, cap),
        Formula::Implies(a, b) if pos => union(dnf(a, false, cap)?, dnf(b, true, cap)?, cap),
        Formula::Implies(a, b) => product(dnf(a, true, cap)?, dnf(b, false, cap)?, cap),
        Formula::Iff(a, b) => {
            let both = product(dnf(a, true, cap)?, dnf(b, pos, cap)?, cap)?;
            let neither = product(dnf(a, false, cap)?, dnf(b, !pos, cap)?, cap)?;
            union(both, neither, cap)
        }
        atom => Ok(vec![vec![SignedAtom { atom: atom.clone(), positive: pos }]]),
    }
}

/// Replaces each negated quantifier `!(forall v..)body` by `!body` on fresh
/// variables, re-expanding into disjunctive form until none remain.
pub fn eliminate_negative_quantifiers(
    conj: Vec<SignedAtom>,
    fresh: &mut FreshNames,
    cap: Option<usize>,
) -> Result<Vec<NormalizedConjunction>, NormalizeError> {
    let mut work = vec![conj];
    let mut done = Vec::new();
    while let Some(c) = work.pop() {
        let Some(i) = c.iter().position(|l| !l.positive && l.atom.is_quantified()) else {
            done.push(c);
            check_cap(done.len(), cap)?;
            continue;
        };
        let (vs, body) = match &c[i].atom {
            Formula::ForallInd(vs, b) | Formula::ForallSet(vs, b) => (vs, b),
            _ => unreachable!(),
        };
        let map: HashMap<Var, Var> = vs.iter().map(|v| (v.clone(), fresh.fresh_like(v))).collect();
        let witness = dnf(&body.substitute(&map), false, cap)?;
        let rest: Vec<SignedAtom> = c.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l.clone()).collect();
        let expanded = product(vec![rest], witness, cap)?;
        // Keep the left-to-right order of disjuncts in the output.
        work.extend(expanded.into_iter().rev());
        check_cap(work.len() + done.len(), cap)?;
    }
    Ok(done.into_iter().map(NormalizedConjunction::new).collect())
}

/// Checks well-formedness and the link condition, renames bound variables
/// apart, and returns normalized conjunctions whose disjunction is
/// equisatisfiable with `f`.
pub fn normalize(f: &Formula, opts: &NormalizeOptions) -> Result<Vec<NormalizedConjunction>, NormalizeError> {
    f.check()?;
    let report = is_3lqsr(f);
    if let Some(v) = report.violations().next() {
        return Err(NormalizeError::NotRestricted(v.inner_atom.clone()));
    }
    let g = rename_apart(f);
    let mut fresh = FreshNames::for_formula(&g);
    let mut out = Vec::new();
    for c in to_dnf(&g, opts.max_disjuncts)? {
        out.extend(eliminate_negative_quantifiers(c, &mut fresh, opts.max_disjuncts)?);
        check_cap(out.len(), opts.max_disjuncts)?;
    }
    out.dedup();
    Ok(out)
}
