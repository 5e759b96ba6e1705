//! Randomized checks of the small-model construction, runnable from the
//! command line.
//!
//! Each suite draws its cases from a ChaCha stream derived from the seed, so a
//! seed and a case count determine the report exactly.

pub mod gen;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::elemset::ElemSet;
use crate::formulas::{render, Formula, Sort, Var};
use crate::normalizer::{normalize, NormalizeOptions};
use crate::relativizer::{
    bound, bound_params, build_d_star, distinguish, BoundParams, RelativizeConfig, RelativizeError, Relativized,
};
use crate::semantics::{evaluate, rebind, Interpretation, Rebinding, Value};

use gen::{case_rng, random_interpretation, random_subset, satisfied_conjunction, Pools};

/// Signature of the restriction operation under test.
pub type RelativizeFn = dyn Fn(&Interpretation, &ElemSet, &RelativizeConfig) -> Result<Relativized, RelativizeError> + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    SmallModel,
    Bound,
    Distinguish,
    FlatIndEquality,
    FlatMembership,
    FlatSetEquality,
    FlatCollMembership,
    RebindIndividuals,
    RebindSets,
    IndQuantifier,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::SmallModel,
        Suite::Bound,
        Suite::Distinguish,
        Suite::FlatIndEquality,
        Suite::FlatMembership,
        Suite::FlatSetEquality,
        Suite::FlatCollMembership,
        Suite::RebindIndividuals,
        Suite::RebindSets,
        Suite::IndQuantifier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SmallModel => "small-model",
            Suite::Bound => "bound",
            Suite::Distinguish => "distinguish",
            Suite::FlatIndEquality => "flat-ind-equality",
            Suite::FlatMembership => "flat-membership",
            Suite::FlatSetEquality => "flat-set-equality",
            Suite::FlatCollMembership => "flat-coll-membership",
            Suite::RebindIndividuals => "rebind-individuals",
            Suite::RebindSets => "rebind-sets",
            Suite::IndQuantifier => "ind-quantifier",
        }
    }

    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64 + 1
    }
}

#[derive(Clone, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    pub cases: usize,
    pub suites: Vec<Suite>,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { seed: 0, cases: 1000, suites: Suite::ALL.to_vec() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    /// Cases whose hypotheses held, so the property was actually checked.
    pub checked: u64,
    pub violations: usize,
    /// Description of the first violating case.
    pub first_violation: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }
}

/// Outcome of one case: how many checks ran, and the first failure.
type CaseResult = Result<u64, String>;

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    run_selftest_with(cfg, &crate::relativizer::relativize)
}

/// Runs the suites with `rel` standing in for the restriction operation.
pub fn run_selftest_with(cfg: &SelftestConfig, rel: &RelativizeFn) -> SelftestReport {
    let suites = cfg
        .suites
        .iter()
        .map(|&s| {
            let results: Vec<CaseResult> =
                (0..cfg.cases).into_par_iter().map(|i| run_case(s, cfg.seed, i as u64, rel)).collect();
            let mut rep = SuiteReport { suite: s, cases: cfg.cases, checked: 0, violations: 0, first_violation: None };
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(k) => rep.checked += k,
                    Err(msg) => {
                        rep.violations += 1;
                        rep.first_violation.get_or_insert_with(|| format!("case {i}: {msg}"));
                    }
                }
            }
            rep
        })
        .collect();
    SelftestReport { seed: cfg.seed, suites }
}

fn run_case(s: Suite, seed: u64, i: u64, rel: &RelativizeFn) -> CaseResult {
    let mut rng = case_rng(seed, s.stream(), i);
    match s {
        Suite::SmallModel | Suite::Bound => small_model_case(&mut rng, s, rel),
        Suite::Distinguish => distinguish_case(&mut rng),
        Suite::FlatIndEquality
        | Suite::FlatMembership
        | Suite::FlatSetEquality
        | Suite::FlatCollMembership => flat_case(&mut rng, s, rel),
        Suite::RebindIndividuals => rebind_individuals_case(&mut rng, rel),
        Suite::RebindSets => rebind_sets_case(&mut rng, rel),
        Suite::IndQuantifier => ind_quantifier_case(&mut rng, rel),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A satisfied conjunction with at most two free variables per sort and
/// prefixes of length at most two, over a domain of 1 to 6 elements.
pub fn small_model_instance(rng: &mut impl Rng) -> (Interpretation, Formula) {
    let pools = Pools::standard(2);
    let n = rng.gen_range(1..=6);
    let m = random_interpretation(rng, n, &pools);
    let f = satisfied_conjunction(rng, &m, &pools, 2);
    (m, f)
}

fn small_model_case(rng: &mut impl Rng, s: Suite, rel: &RelativizeFn) -> CaseResult {
    let (m, f) = small_model_instance(rng);
    let conjs = normalize(&f, &NormalizeOptions::default()).map_err(err)?;
    let [conj] = conjs.as_slice() else {
        return Err(format!("{} normalized to {} conjunctions", render(&f), conjs.len()));
    };
    let ws = build_d_star(&m, conj).map_err(err)?;
    let d = ws.as_set();
    if s == Suite::Bound {
        let b = bound(conj);
        if d.len() as u64 > b {
            return Err(format!("{}: subdomain of {} elements exceeds bound {b}", render(&f), d.len()));
        }
        return Ok(1);
    }
    let cfg = RelativizeConfig {
        preserved_sets: conj.inventory.free(Sort::Set).iter().cloned().collect(),
        default_elem: None,
    };
    let r = rel(&m, &d, &cfg).map_err(err)?;
    if !evaluate(&r.interpretation, &conj.to_formula()).map_err(err)? {
        return Err(format!("{} fails on the restriction to {:?}", render(&f), d));
    }
    Ok(1)
}

fn distinguish_case(rng: &mut impl Rng) -> CaseResult {
    let k = rng.gen_range(0..=5);
    let pools = Pools::sized(0, k, 0);
    let n = rng.gen_range(1..=6);
    let mut m = Interpretation::new(n).map_err(err)?;
    // Draw from a few values so that equal sets are common.
    let palette: Vec<ElemSet> = (0..3).map(|_| random_subset(rng, n)).collect();
    for v in &pools.sets {
        let s = if rng.gen_bool(0.5) { palette.choose(rng).unwrap().clone() } else { random_subset(rng, n) };
        m.set_set(v.name(), s).map_err(err)?;
    }
    let chosen: ElemSet = distinguish(&m, &pools.sets).into_iter().map(|(e, _, _)| e).collect();
    if chosen.len() > k.saturating_sub(1) {
        return Err(format!("{} separators for {k} sets", chosen.len()));
    }
    for a in &pools.sets {
        for b in &pools.sets {
            let (sa, sb) = (m.set(a.name()).unwrap(), m.set(b.name()).unwrap());
            if sa != sb && sa.symmetric_difference(sb).intersection(&chosen).is_empty() {
                return Err(format!("{} and {} not separated", a.name(), b.name()));
            }
        }
    }
    Ok(1)
}

/// Random interpretation, subdomain, default element and preserved sets.
struct RelSetup {
    pools: Pools,
    m: Interpretation,
    sub: ElemSet,
    cfg: RelativizeConfig,
}

fn rel_setup(rng: &mut impl Rng, separate: bool) -> RelSetup {
    let pools = Pools::sized(3, 3, 2);
    let n = rng.gen_range(1..=6);
    let m = random_interpretation(rng, n, &pools);
    let mut sub = random_subset(rng, n);
    let preserved: BTreeSet<Var> = pools.sets.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    if separate {
        sub = sub.union(&separators(&m, &pools.sets));
    }
    if sub.is_empty() {
        sub.insert(rng.gen_range(0..n));
    }
    let default_elem = Some(*sub.to_vec().choose(rng).unwrap());
    RelSetup { pools, m, sub, cfg: RelativizeConfig { preserved_sets: preserved, default_elem } }
}

fn separators(m: &Interpretation, sets: &[Var]) -> ElemSet {
    distinguish(m, sets).into_iter().map(|(e, _, _)| e).collect()
}

fn separated(m: &Interpretation, a: &Var, b: &Var, sub: &ElemSet) -> bool {
    let (sa, sb) = (m.set(a.name()).unwrap(), m.set(b.name()).unwrap());
    sa == sb || !sa.symmetric_difference(sb).intersection(sub).is_empty()
}

fn agree(m: &Interpretation, r: &Interpretation, f: &Formula) -> Result<(), String> {
    let (a, b) = (evaluate(m, f).map_err(err)?, evaluate(r, f).map_err(err)?);
    if a != b {
        return Err(format!("{} is {a} before and {b} after restriction", render(f)));
    }
    Ok(())
}

/// Flat atoms keep their truth value whenever the relevant hypothesis holds.
fn flat_case(rng: &mut impl Rng, s: Suite, rel: &RelativizeFn) -> CaseResult {
    let separate = matches!(s, Suite::FlatSetEquality | Suite::FlatCollMembership) && rng.gen_bool(0.8);
    let RelSetup { pools, m, sub, cfg } = rel_setup(rng, separate);
    let r = rel(&m, &sub, &cfg).map_err(err)?.interpretation;
    let kept = |v: &Var| sub.contains(m.ind(v.name()).unwrap());
    let mut checked = 0;
    match s {
        Suite::FlatIndEquality => {
            for x in pools.inds.iter().filter(|v| kept(v)) {
                for y in pools.inds.iter().filter(|v| kept(v)) {
                    agree(&m, &r, &Formula::eq_ind(x, y))?;
                    checked += 1;
                }
            }
        }
        Suite::FlatMembership => {
            for x in pools.inds.iter().filter(|v| kept(v)) {
                for xs in &pools.sets {
                    agree(&m, &r, &Formula::in_set(x, xs))?;
                    checked += 1;
                }
            }
        }
        Suite::FlatSetEquality => {
            for a in &pools.sets {
                for b in pools.sets.iter().filter(|b| separated(&m, a, b, &sub)) {
                    agree(&m, &r, &Formula::eq_set(a, b))?;
                    checked += 1;
                }
            }
        }
        Suite::FlatCollMembership => {
            let pres: Vec<&Var> = cfg.preserved_sets.iter().collect();
            if pres.iter().all(|a| pres.iter().all(|b| separated(&m, a, b, &sub))) {
                for x in &pres {
                    for c in &pools.colls {
                        agree(&m, &r, &Formula::in_coll(x, c))?;
                        checked += 1;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(checked)
}

fn compare_values(a: &Interpretation, b: &Interpretation, vars: &[Var]) -> Result<(), String> {
    for v in vars {
        if a.value(v) != b.value(v) {
            return Err(format!("{} is {:?} one way and {:?} the other", v.name(), a.value(v), b.value(v)));
        }
    }
    Ok(())
}

/// Rebinding individuals to elements of the subdomain commutes with the
/// restriction, on every individual and set variable.
fn rebind_individuals_case(rng: &mut impl Rng, rel: &RelativizeFn) -> CaseResult {
    let RelSetup { pools, m, sub, cfg } = rel_setup(rng, false);
    let elems = sub.to_vec();
    let zs: Vec<Var> = (0..rng.gen_range(1..=2))
        .map(|i| if rng.gen_bool(0.3) { pools.inds[i].clone() } else { Var::ind(&format!("z{}", i + 1)) })
        .collect();
    let us: Vec<usize> = zs.iter().map(|_| *elems.choose(rng).unwrap()).collect();
    let mut before = Rebinding::default();
    for (z, &u) in zs.iter().zip(&us) {
        before = before.with(z, Value::Elem(u));
    }
    let rebound_first = rel(&rebind(&m, &before).map_err(err)?, &sub, &cfg).map_err(err)?;
    let restricted = rel(&m, &sub, &cfg).map_err(err)?;
    let mut after = Rebinding::default();
    for (z, &u) in zs.iter().zip(&us) {
        after = after.with(z, Value::Elem(restricted.map_elem(u).expect("u in subdomain")));
    }
    let restricted_first = rebind(&restricted.interpretation, &after).map_err(err)?;
    let vars: Vec<Var> = pools.inds.iter().chain(&zs).chain(&pools.sets).cloned().collect();
    compare_values(&rebound_first.interpretation, &restricted_first, &vars)?;
    Ok(1)
}

/// Rebinding fresh set variables to subsets of the subdomain that are not
/// images of preserved sets commutes with the restriction, when the rebound
/// variables are preserved too.
fn rebind_sets_case(rng: &mut impl Rng, rel: &RelativizeFn) -> CaseResult {
    let RelSetup { m, sub, cfg, .. } = rel_setup(rng, false);
    let images: BTreeSet<ElemSet> = cfg.preserved_sets.iter().map(|v| m.set(v.name()).unwrap().intersection(&sub)).collect();
    let candidates: Vec<ElemSet> = (0..1u64 << sub.len())
        .map(|mask| sub.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| e).collect())
        .filter(|u: &ElemSet| !images.contains(u))
        .collect();
    if candidates.is_empty() {
        return Ok(0);
    }
    let zs: Vec<Var> = (1..=rng.gen_range(1..=2)).map(|i| Var::set(&format!("Z{i}"))).collect();
    let us: Vec<ElemSet> = zs.iter().map(|_| candidates.choose(rng).unwrap().clone()).collect();
    let mut before = Rebinding::default();
    for (z, u) in zs.iter().zip(&us) {
        before = before.with(z, Value::Set(u.clone()));
    }
    let mut wider = cfg.clone();
    wider.preserved_sets.extend(zs.iter().cloned());
    let rebound_first = rel(&rebind(&m, &before).map_err(err)?, &sub, &wider).map_err(err)?;
    let restricted = rel(&m, &sub, &cfg).map_err(err)?;
    let mut after = Rebinding::default();
    for (z, u) in zs.iter().zip(&us) {
        after = after.with(z, Value::Set(restricted.map_set(u)));
    }
    let restricted_first = rebind(&restricted.interpretation, &after).map_err(err)?;
    if rebound_first.interpretation != restricted_first {
        return Err(format!("interpretations differ after rebinding {:?} to {:?}", zs, us));
    }
    Ok(1)
}

/// A true individual quantifier whose free individuals stay in the subdomain
/// remains true after restriction.
fn ind_quantifier_case(rng: &mut impl Rng, rel: &RelativizeFn) -> CaseResult {
    let RelSetup { pools, m, mut sub, cfg } = rel_setup(rng, false);
    for _ in 0..12 {
        let q = gen::ind_quantifier(rng, &pools, 2);
        if !evaluate(&m, &q).map_err(err)? {
            continue;
        }
        for x in q.free_vars().iter().filter(|v| v.sort() == Sort::Individual) {
            sub.insert(m.ind(x.name()).unwrap());
        }
        let mut cfg = cfg.clone();
        cfg.default_elem = cfg.default_elem.filter(|d| sub.contains(*d));
        let r = rel(&m, &sub, &cfg).map_err(err)?;
        if !evaluate(&r.interpretation, &q).map_err(err)? {
            return Err(format!("{} fails on the restriction to {:?}", render(&q), sub));
        }
        return Ok(1);
    }
    Ok(0)
}

/// The instance with one free individual, two free sets and one nested
/// quantifier under a one-variable set prefix.
pub fn worked_bound() -> BoundParams {
    let f = crate::parse("x in X & !(X = Y) & (forall Z)(Z in A -> (forall z)(z in Z -> z in X))").expect("parses");
    let conjs = normalize(&f, &NormalizeOptions::default()).expect("restricted");
    bound_params(&conjs[0])
}
