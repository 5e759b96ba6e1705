//! Satisfiability decisions.
//!
//! A satisfiable normalized conjunction has a model no larger than
//! [`bound`](crate::relativizer::bound); the search grounds the conjunction
//! over that many candidate elements and hands it to a SAT solver, then
//! narrows down to the least model size.

mod ground;
pub mod hfrag;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::formulas::{Formula, Var};
use crate::normalizer::{normalize, NormalizeError, NormalizeOptions, NormalizedConjunction};
use crate::relativizer::{bound, BoundParams};
use crate::semantics::{evaluate, Interpretation};
use ground::{least_model, model_of_size, GroundStats, Universe};

pub use hfrag::{flatten_conjunctive, flatten_h, recognize_h, HBranch, HFragmentReport};

/// Default ceiling on the number of set-quantifier instances one grounding
/// may create.
pub const DEFAULT_INSTANCE_BUDGET: u64 = 1 << 18;
/// Default ceiling on the domain size for the bounded-cardinality path.
pub const DEFAULT_H_DOMAIN_CAP: usize = 512;
/// Witnesses are re-checked by direct evaluation when this cheap.
const VERIFY_BUDGET: f64 = 5e7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecideError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("not in the bounded-cardinality fragment: {0}")]
    NotInFragment(String),
    #[error("search at size {0} exceeds the grounding budget")]
    TooLarge(usize),
    #[error("internal error: witness does not satisfy the formula")]
    WitnessRejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

#[derive(Clone, Debug)]
pub struct DecideOptions {
    /// Never search domains larger than this.
    pub max_domain: Option<usize>,
    pub max_disjuncts: Option<usize>,
    /// Cap on set-quantifier instances per grounding over all subsets.
    pub instance_budget: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { max_domain: None, max_disjuncts: None, instance_budget: DEFAULT_INSTANCE_BUDGET }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchStats {
    pub disjuncts: usize,
    /// Model-size bound per disjunct.
    pub bounds: Vec<u64>,
    /// Largest size actually searched per disjunct.
    pub searched: Vec<usize>,
    pub witness_disjunct: Option<usize>,
    pub witness_checked: bool,
    pub solver_calls: u64,
    pub variables: u64,
    pub clauses: u64,
}

impl SearchStats {
    fn absorb(&mut self, g: &GroundStats) {
        self.solver_calls += g.solver_calls;
        self.variables += g.variables;
        self.clauses += g.clauses;
    }
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    /// For SAT: a model of least size among those found, over the free
    /// variables of the input.
    pub witness: Option<Interpretation>,
    /// Largest bound among the disjuncts.
    pub bound: u64,
    pub stats: SearchStats,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "bound_used": self.bound,
            "witness": self.witness.as_ref().map(Interpretation::to_json),
            "stats": self.stats,
        })
    }
}

fn verify_cost(f: &Formula, n: usize) -> f64 {
    match f {
        Formula::ForallInd(zs, b) => (n as f64).powi(zs.len() as i32) * verify_cost(b, n),
        Formula::ForallSet(zs, b) => 2f64.powi((n * zs.len()) as i32) * verify_cost(b, n),
        _ => 1.0 + f.children().iter().map(|c| verify_cost(c, n)).sum::<f64>(),
    }
}

/// Checks the witness by direct evaluation when that is affordable.
fn check_witness(m: &Interpretation, f: &Formula) -> Result<bool, DecideError> {
    if m.domain_size() > crate::semantics::SET_QUANTIFIER_LIMIT || verify_cost(f, m.domain_size()) > VERIFY_BUDGET {
        return Ok(false);
    }
    match evaluate(m, f) {
        Ok(true) => Ok(true),
        _ => Err(DecideError::WitnessRejected),
    }
}

/// Restricts a model to the free variables of `f`, filling unmentioned ones.
fn project(mut m: Interpretation, f: &Formula) -> Interpretation {
    let free: BTreeSet<Var> = f.free_vars();
    m.restrict_to(&free);
    m.complete_for(&free);
    m
}

/// Largest domain size whose set-quantifier expansion stays within budget.
fn all_subsets_cap(formulas: &[Formula], budget: u64) -> usize {
    let mut prefixes = Vec::new();
    for f in formulas {
        f.walk(&mut |g| match g {
            Formula::ForallSet(zs, _) => prefixes.push(zs.len()),
            Formula::InColl(..) => prefixes.push(1),
            _ => {}
        });
    }
    if prefixes.is_empty() {
        return usize::MAX;
    }
    let cost = |n: usize| -> f64 { prefixes.iter().map(|&m| 2f64.powi((n * m) as i32)).sum() };
    let mut n = 1;
    while n < 62 && cost(n + 1) <= budget as f64 {
        n += 1;
    }
    n
}

enum Outcome {
    Sat(Interpretation),
    Unsat,
    Unknown,
}

struct DisjunctResult {
    bound: u64,
    searched: usize,
    outcome: Outcome,
    stats: GroundStats,
}

fn search_conjunction(c: &NormalizedConjunction, opts: &DecideOptions) -> DisjunctResult {
    let b = bound(c);
    let formulas: Vec<Formula> = c.literals.iter().map(|l| l.to_formula()).collect();
    let b_usize = usize::try_from(b).unwrap_or(usize::MAX);
    let cap = b_usize
        .min(opts.max_domain.unwrap_or(usize::MAX))
        .min(all_subsets_cap(&formulas, opts.instance_budget))
        .max(1);
    let res = least_model(&formulas, cap, Universe::All);
    let outcome = match res.model {
        Some(m) => Outcome::Sat(m),
        None if cap >= b_usize => Outcome::Unsat,
        None => Outcome::Unknown,
    };
    DisjunctResult { bound: b, searched: cap, outcome, stats: res.stats }
}

/// Decides satisfiability of a formula of the restricted language.
///
/// The answer is SAT with a least-size witness, UNSAT when every disjunct was
/// searched up to its bound, and UNKNOWN when caps cut a search short.
pub fn decide_sat(f: &Formula, opts: &DecideOptions) -> Result<Verdict, DecideError> {
    let conjs = normalize(f, &NormalizeOptions { max_disjuncts: opts.max_disjuncts })?;
    let results: Vec<DisjunctResult> = conjs.par_iter().map(|c| search_conjunction(c, opts)).collect();
    let mut stats = SearchStats { disjuncts: conjs.len(), ..Default::default() };
    for r in &results {
        stats.bounds.push(r.bound);
        stats.searched.push(r.searched);
        stats.absorb(&r.stats);
    }
    let bound_max = results.iter().map(|r| r.bound).max().unwrap_or(0);
    let best = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match &r.outcome {
            Outcome::Sat(m) => Some((m.domain_size(), i, m)),
            _ => None,
        })
        .min_by_key(|(n, i, _)| (*n, *i));
    if let Some((_, i, m)) = best {
        check_witness(m, &conjs[i].to_formula())?;
        let w = project(m.clone(), f);
        stats.witness_checked = check_witness(&w, f)?;
        stats.witness_disjunct = Some(i);
        return Ok(Verdict { status: Status::Sat, witness: Some(w), bound: bound_max, stats });
    }
    let status = if results.iter().any(|r| matches!(r.outcome, Outcome::Unknown)) {
        Status::Unknown
    } else {
        Status::Unsat
    };
    Ok(Verdict { status, witness: None, bound: bound_max, stats })
}

/// A model of the conjunction with exactly `n` elements, if one exists.
pub fn search_assignment(
    c: &NormalizedConjunction,
    n: usize,
    opts: &DecideOptions,
) -> Result<Option<Interpretation>, DecideError> {
    let formulas: Vec<Formula> = c.literals.iter().map(|l| l.to_formula()).collect();
    if n == 0 || n > all_subsets_cap(&formulas, opts.instance_budget) {
        return Err(DecideError::TooLarge(n));
    }
    Ok(model_of_size(&formulas, n, Universe::All).0)
}

/// Decides a formula of the bounded-cardinality fragment for the given `h`.
///
/// Only the non-branching decomposition rules are applied; the remaining
/// disjunctions go to the SAT solver, and the size bound is taken over all
/// branches at once.
pub fn decide_sat_h(f: &Formula, h: usize, opts: &DecideOptions) -> Result<Verdict, DecideError> {
    let report = recognize_h(f, h);
    if !report.in_fragment {
        return Err(DecideError::NotInFragment(report.violations.join("; ")));
    }
    let branch = flatten_conjunctive(f);
    let params: BoundParams = hfrag::h_bound_params(&branch.formulas);
    let b = params.value();
    let cap = usize::try_from(b)
        .unwrap_or(usize::MAX)
        .min(opts.max_domain.unwrap_or(DEFAULT_H_DOMAIN_CAP))
        .max(1);
    let res = least_model(&branch.formulas, cap, Universe::Below(h));
    let mut stats = SearchStats { disjuncts: 1, bounds: vec![b], searched: vec![cap], ..Default::default() };
    stats.absorb(&res.stats);
    match res.model {
        Some(m) => {
            let w = project(m, f);
            stats.witness_checked = check_witness(&w, f)?;
            stats.witness_disjunct = Some(0);
            Ok(Verdict { status: Status::Sat, witness: Some(w), bound: b, stats })
        }
        None => {
            let status = if cap as u64 >= b { Status::Unsat } else { Status::Unknown };
            Ok(Verdict { status, witness: None, bound: b, stats })
        }
    }
}
