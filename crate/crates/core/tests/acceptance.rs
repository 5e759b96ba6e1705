//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! Run with `cargo test -p syllog-core --test acceptance`. A subset can be
//! selected by passing criterion numbers, e.g. `-- 4 8`.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use common::{brute_force_sat, holds, modal_formulas, modal_sat, Oracle};
use syllog_core::decider::hfrag::{small_sets_axiom, subordination_axiom, universe_axiom};
use syllog_core::decider::{decide_sat, decide_sat_h, flatten_h, recognize_h, DecideOptions, Status};
use syllog_core::encodings::Construct;
use syllog_core::formulas::{Formula, Var};
use syllog_core::normalizer::{normalize, NormalizeOptions};
use syllog_core::relativizer::{bound, build_d_star, distinguish, relativize, BoundParams, RelativizeConfig};
use syllog_core::restriction::{is_3lqsr, Certification};
use syllog_core::s5::{decide_s5, parse_modal, s5_oracle, translate_s5, Modal, S5Options, Translation};
use syllog_core::selftest::gen::{self, case_rng, random_formula, FormulaShape, Pools};
use syllog_core::selftest::{run_selftest, small_model_instance, worked_bound, SelftestConfig, Suite};
use syllog_core::{evaluate, render, ElemSet, Interpretation, Sort};

const SEED: u64 = 0x5e7;
const ORACLE_BUDGET: u64 = 4_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(t: Duration, limit_secs: u64) -> bool {
    t <= Duration::from_secs(limit_secs)
}

/// Pairs (interpretation, satisfied conjunction) for criteria 1 and 2.
fn small_model_cases(count: usize) -> Vec<(Interpretation, Formula)> {
    (0..count as u64).map(|i| small_model_instance(&mut case_rng(SEED, 100, i))).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cases = small_model_cases(1000);
    let mut failures = Vec::new();
    let mut nested = 0;
    for (i, (m, f)) in cases.iter().enumerate() {
        let conjs = normalize(f, &NormalizeOptions::default()).expect("generated formulas are restricted");
        assert_eq!(conjs.len(), 1, "a conjunction of literals normalizes to itself");
        let c = &conjs[0];
        if !c.nested.is_empty() {
            nested += 1;
        }
        let d = build_d_star(m, c).expect("m satisfies the conjunction").as_set();
        let cfg = RelativizeConfig {
            preserved_sets: c.inventory.free(Sort::Set).iter().cloned().collect(),
            default_elem: None,
        };
        let r = relativize(m, &d, &cfg).expect("valid subdomain").interpretation;
        // Both evaluators must accept the restricted model.
        let ok = evaluate(&r, &c.to_formula()).unwrap() && holds(&r, &c.to_formula());
        if !ok {
            failures.push(format!("case {i}: {}", render(f)));
        }
    }
    let t = start.elapsed();
    outcome(
        failures.is_empty() && within(t, 120),
        format!(
            "{}/{} restricted models satisfy the conjunction ({} with nested quantifiers) in {:.1?}{}",
            cases.len() - failures.len(),
            cases.len(),
            nested,
            t,
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let cases = small_model_cases(1000);
    let mut over = 0;
    let mut tight = 0;
    for (m, f) in &cases {
        let c = &normalize(f, &NormalizeOptions::default()).unwrap()[0];
        let size = build_d_star(m, c).unwrap().elements.len() as u64;
        let b = bound(c);
        if size > b {
            over += 1;
        }
        if size == b {
            tight += 1;
        }
    }
    let literal = BoundParams { individuals: 1, sets: 2, nested: 1, max_set_prefix: 1, max_nested_prefix: 1 }.value();
    let parsed = worked_bound().value();
    outcome(
        over == 0 && literal == 4 && parsed == 4,
        format!("{over} of {} subdomains exceed the bound ({tight} meet it); worked instance gives {literal} and {parsed}", cases.len()),
    )
}

fn criterion_3() -> Outcome {
    let suites = [
        Suite::FlatIndEquality,
        Suite::FlatMembership,
        Suite::FlatSetEquality,
        Suite::FlatCollMembership,
        Suite::RebindIndividuals,
        Suite::RebindSets,
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for s in suites {
        let start = Instant::now();
        let rep = run_selftest(&SelftestConfig { seed: SEED, cases: 1000, suites: vec![s] });
        let t = start.elapsed();
        let r = &rep.suites[0];
        pass &= r.passed() && r.checked > 0 && within(t, 60);
        parts.push(format!("{} {}v/{}chk {:.1?}", s.name(), r.violations, r.checked, t));
        if let Some(v) = &r.first_violation {
            parts.push(v.clone());
        }
    }
    outcome(pass, parts.join(", "))
}

/// Random restricted formulas with at most two variables per sort, prefixes
/// of at most two, and every disjunct bound at most 3.
fn small_corpus(stream: u64, count: usize) -> Vec<Formula> {
    let mut out = Vec::new();
    let mut i = 0u64;
    while out.len() < count {
        let mut rng = case_rng(SEED, stream, i);
        i += 1;
        let shape = FormulaShape {
            pools: Pools::sized(rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2)),
            max_prefix: 2,
            depth: rng.gen_range(1..=3),
            set_quantifiers: true,
        };
        let f = random_formula(&mut rng, &shape);
        let Ok(conjs) = normalize(&f, &NormalizeOptions { max_disjuncts: Some(64) }) else { continue };
        if conjs.iter().all(|c| bound(c) <= 3) {
            out.push(f);
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let corpus = small_corpus(400, 500);
    let results: Vec<Result<bool, String>> = corpus
        .par_iter()
        .map(|f| {
            let v = decide_sat(f, &DecideOptions::default()).map_err(|e| format!("{}: {e}", render(f)))?;
            let o = brute_force_sat(f, 3, ORACLE_BUDGET);
            match (&v.status, &o) {
                (_, Oracle::Unknown) => Err(format!("oracle budget exhausted on {}", render(f))),
                (Status::Sat, Oracle::Sat(_)) => {
                    let w = v.witness.as_ref().expect("SAT has a witness");
                    if evaluate(w, f).unwrap() && holds(w, f) {
                        Ok(true)
                    } else {
                        Err(format!("witness rejected for {}", render(f)))
                    }
                }
                (Status::Unsat, Oracle::Unsat) => Ok(false),
                (s, o) => Err(format!("decider {s:?}, oracle {} on {}", o.is_sat(), render(f))),
            }
        })
        .collect();
    let t = start.elapsed();
    let sat = results.iter().filter(|r| matches!(r, Ok(true))).count();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    outcome(
        errors.is_empty() && within(t, 300),
        format!(
            "{}/{} verdicts agree ({sat} SAT) in {:.1?}{}",
            results.len() - errors.len(),
            results.len(),
            t,
            errors.first().map(|e| format!("; first mismatch {e}")).unwrap_or_default()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let mut max_seen = 0;
    for i in 0..1000u64 {
        let mut rng = case_rng(SEED, 500, i);
        let k = rng.gen_range(0..=5);
        let n = rng.gen_range(1..=6);
        let pools = Pools::sized(0, k, 0);
        let mut m = Interpretation::new(n).unwrap();
        let palette: Vec<ElemSet> = (0..2).map(|_| gen::random_subset(&mut rng, n)).collect();
        for v in &pools.sets {
            let s = if rng.gen_bool(0.4) { palette[rng.gen_range(0..2)].clone() } else { gen::random_subset(&mut rng, n) };
            m.set_set(v.name(), s).unwrap();
        }
        let delta: BTreeSet<usize> = distinguish(&m, &pools.sets).into_iter().map(|(e, _, _)| e).collect();
        max_seen = max_seen.max(delta.len());
        if delta.len() > k.saturating_sub(1) {
            bad.push(format!("case {i}: {} elements for {k} sets", delta.len()));
        }
        for a in &pools.sets {
            for b in &pools.sets {
                let (sa, sb) = (m.set(a.name()).unwrap(), m.set(b.name()).unwrap());
                if sa != sb && !sa.iter().chain(sb.iter()).any(|e| sa.contains(e) != sb.contains(e) && delta.contains(&e)) {
                    bad.push(format!("case {i}: {} and {} not separated", a.name(), b.name()));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{} violations over 1000 cases, largest separator set {max_seen}{}", bad.len(),
        bad.first().map(|b| format!("; {b}")).unwrap_or_default()))
}

fn all_constructs() -> Vec<Construct> {
    let (x, y, w) = (Var::set("X"), Var::set("Y"), Var::set("W"));
    let (a, b, c) = (Var::coll("A"), Var::coll("B"), Var::coll("C"));
    let e = Var::ind("x");
    use Construct::*;
    let mut v = vec![
        SetSubset(x.clone(), y.clone()),
        SetUnion(x.clone(), y.clone(), w.clone()),
        SetIntersection(x.clone(), y.clone(), w.clone()),
        SetComplement(x.clone(), y.clone()),
        SetEmpty(x.clone()),
        SetFull(x.clone()),
        SetSingleton(x.clone(), e),
        CollEqual(a.clone(), b.clone()),
        CollSubset(a.clone(), b.clone()),
        CollIntersection(a.clone(), b.clone(), c.clone()),
        CollUnion(a.clone(), b.clone(), c.clone()),
        CollComplement(a.clone(), b.clone()),
        CollEmpty(a.clone()),
        CollFull(a.clone()),
        CollSingleton(a.clone(), x.clone()),
        Powerset(a.clone(), x.clone()),
        Cartesian(a.clone(), vec![x.clone()]),
        Cartesian(a.clone(), vec![x.clone(), y.clone()]),
        Cartesian(a.clone(), vec![x.clone(), y.clone(), w.clone()]),
        PowStar(a.clone(), vec![x.clone()]),
        PowStar(a.clone(), vec![x.clone(), y.clone()]),
        PowStar(a.clone(), vec![x.clone(), y.clone(), w.clone()]),
    ];
    for h in 0..=3 {
        v.push(PowAtMost(a.clone(), x.clone(), h));
        v.push(PowFewer(a.clone(), x.clone(), h));
        v.push(PowExactly(a.clone(), x.clone(), h));
    }
    v
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let constructs = all_constructs();
    for c in &constructs {
        let rep = is_3lqsr(&c.encode());
        if !rep.member {
            bad.push(format!("{} not restricted", c.kind()));
        }
        if matches!(c, Construct::Powerset(..) | Construct::PowAtMost(..)) {
            if rep.entries.is_empty() || rep.entries.iter().any(|e| e.verdict != Certification::Schema) {
                bad.push(format!("{} not certified by the schema", c.kind()));
            }
        }
    }
    outcome(bad.is_empty(), format!("{} encodings checked{}", constructs.len(), bad.first().map(|b| format!("; {b}")).unwrap_or_default()))
}

/// Expected truth of a construct, computed on bit masks: sets are masks over
/// elements and collections are masks over subset indices.
fn expected(c: &Construct, n: usize, ind: usize, sets: &[u64], colls: &[u64]) -> bool {
    use Construct::*;
    let all = (1u64 << n) - 1;
    let subsets = 1u64 << n;
    let all_c = if subsets == 64 { u64::MAX } else { (1u64 << subsets) - 1 };
    let family = |p: &dyn Fn(u64) -> bool| (0..subsets).filter(|&s| p(s)).fold(0u64, |acc, s| acc | 1 << s);
    let size = |s: u64| s.count_ones() as usize;
    match c {
        SetSubset(..) => sets[0] & !sets[1] == 0,
        SetUnion(..) => sets[0] == sets[1] | sets[2],
        SetIntersection(..) => sets[0] == sets[1] & sets[2],
        SetComplement(..) => sets[0] == all & !sets[1],
        SetEmpty(..) => sets[0] == 0,
        SetFull(..) => sets[0] == all,
        SetSingleton(..) => sets[0] == 1 << ind,
        CollEqual(..) => colls[0] == colls[1],
        CollSubset(..) => colls[0] & !colls[1] == 0,
        CollIntersection(..) => colls[0] == colls[1] & colls[2],
        CollUnion(..) => colls[0] == colls[1] | colls[2],
        CollComplement(..) => colls[0] == all_c & !colls[1],
        CollEmpty(..) => colls[0] == 0,
        CollFull(..) => colls[0] == all_c,
        CollSingleton(..) => colls[0] == 1 << sets[0],
        Powerset(..) => colls[0] == family(&|s| s & !sets[0] == 0),
        PowAtMost(_, _, h) => colls[0] == family(&|s| s & !sets[0] == 0 && size(s) <= *h),
        PowFewer(_, _, h) => colls[0] == family(&|s| s & !sets[0] == 0 && size(s) < *h),
        PowExactly(_, _, h) => colls[0] == family(&|s| s & !sets[0] == 0 && size(s) == *h),
        Cartesian(_, xs) => {
            let meet = sets[..xs.len()].iter().fold(all, |acc, s| acc & s);
            colls[0] == family(&|s| s & !meet == 0 && size(s) <= xs.len())
        }
        PowStar(_, xs) => {
            let xs = &sets[..xs.len()];
            let union = xs.iter().fold(0, |acc, s| acc | s);
            colls[0] == family(&|s| s & !union == 0 && xs.iter().all(|x| s & x != 0))
        }
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let constructs = all_constructs();
    let results: Vec<(String, u64, Option<String>)> = constructs
        .par_iter()
        .map(|c| {
            let f = c.encode();
            let fv = f.free_vars();
            let of = |s: Sort| fv.iter().filter(|v| v.sort() == s).cloned().collect::<Vec<Var>>();
            let (inds, sets, colls) = (of(Sort::Individual), of(Sort::Set), of(Sort::Collection));
            // Parameter order fixes which mask is which.
            let order = |vs: Vec<Var>, names: &[&str]| -> Vec<Var> {
                let mut out: Vec<Var> = names.iter().filter_map(|n| vs.iter().find(|v| v.name() == *n).cloned()).collect();
                out.extend(vs.into_iter().filter(|v| !names.contains(&v.name())));
                out
            };
            let sets = order(sets, &["X", "Y", "W"]);
            let colls = order(colls, &["A", "B", "C"]);
            let mut checked = 0u64;
            for n in 1..=3usize {
                let subsets = 1u64 << n;
                let ind_range = if inds.is_empty() { 1 } else { n };
                let set_total = (1u64 << n).pow(sets.len() as u32);
                let coll_total = (1u64 << subsets).pow(colls.len() as u32);
                for e in 0..ind_range {
                    for sv in 0..set_total {
                        let sm: Vec<u64> = (0..sets.len()).map(|i| (sv >> (i * n)) & ((1 << n) - 1)).collect();
                        for cv in 0..coll_total {
                            let cm: Vec<u64> = (0..colls.len())
                                .map(|i| (cv >> (i as u64 * subsets)) & ((1u64 << subsets) - 1))
                                .collect();
                            let mut m = Interpretation::new(n).unwrap();
                            for v in &inds {
                                m.set_ind(v.name(), e).unwrap();
                            }
                            for (v, s) in sets.iter().zip(&sm) {
                                m.set_set(v.name(), ElemSet::from_mask(*s)).unwrap();
                            }
                            for (v, c) in colls.iter().zip(&cm) {
                                let members = (0..subsets).filter(|s| c >> s & 1 == 1).map(ElemSet::from_mask).collect();
                                m.set_coll(v.name(), members).unwrap();
                            }
                            let got = evaluate(&m, &f).unwrap();
                            if got != expected(c, n, e, &sm, &cm) {
                                return (c.kind().to_string(), checked, Some(format!("n={n} sets={sm:?} colls={cm:?} formula says {got}")));
                            }
                            checked += 1;
                        }
                    }
                }
            }
            (c.kind().to_string(), checked, None)
        })
        .collect();
    let t = start.elapsed();
    let total: u64 = results.iter().map(|r| r.1).sum();
    let bad: Vec<String> = results.iter().filter_map(|(k, _, e)| e.as_ref().map(|e| format!("{k}: {e}"))).collect();
    outcome(
        bad.is_empty() && within(t, 300),
        format!("{total} interpretations over {} encodings in {:.1?}{}", results.len(), t, bad.first().map(|b| format!("; {b}")).unwrap_or_default()),
    )
}

fn axioms() -> Vec<Modal> {
    ["[]p -> p", "<>p -> []<>p", "p -> []<>p", "[]p -> [][]p", "[]p -> <>p"]
        .iter()
        .map(|s| parse_modal(s).unwrap())
        .collect()
}

fn random_modal(rng: &mut impl Rng, depth: usize) -> Modal {
    if depth == 0 || rng.gen_bool(0.2) {
        return Modal::letter(["p", "q"][rng.gen_range(0..2)]);
    }
    match rng.gen_range(0..6) {
        0 => Modal::not(random_modal(rng, depth - 1)),
        1 => Modal::necessarily(random_modal(rng, depth - 1)),
        2 => Modal::possibly(random_modal(rng, depth - 1)),
        3 => Modal::and(random_modal(rng, depth - 1), random_modal(rng, depth - 1)),
        4 => Modal::or(random_modal(rng, depth - 1), random_modal(rng, depth - 1)),
        _ => Modal::implies(random_modal(rng, depth - 1), random_modal(rng, depth - 1)),
    }
}

fn s5_corpus() -> Vec<Modal> {
    let mut out = Vec::new();
    for k in 0..=3 {
        out.extend(modal_formulas(&["p", "q"], k));
    }
    out
}

fn random_s5_corpus() -> Vec<Modal> {
    (0..200u64).map(|i| random_modal(&mut case_rng(SEED, 800, i), 4)).collect()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let opts = S5Options::default();
    let check = |phi: &Modal| -> Result<bool, String> {
        let v = decide_s5(phi, &opts).map_err(|e| format!("{phi}: {e}"))?;
        let lib = s5_oracle(phi).is_some();
        let ind = modal_sat(phi).is_some();
        match v.status {
            Status::Unknown => Err(format!("UNKNOWN on {phi}")),
            s if (s == Status::Sat) == lib && lib == ind => Ok(lib),
            s => Err(format!("{phi}: decider {s:?}, oracles {lib}/{ind}")),
        }
    };
    let exhaustive = s5_corpus();
    let a: Vec<Result<bool, String>> = exhaustive.par_iter().map(check).collect();
    let b: Vec<Result<bool, String>> = axioms().iter().map(|ax| {
        // Valid iff the negation is unsatisfiable.
        check(&Modal::not(ax.clone())).and_then(|sat| if sat { Err(format!("{ax} not valid")) } else { Ok(sat) })
    }).collect();
    let c: Vec<Result<bool, String>> = random_s5_corpus().par_iter().map(check).collect();
    let t = start.elapsed();
    let errs: Vec<&String> = a.iter().chain(&b).chain(&c).filter_map(|r| r.as_ref().err()).collect();
    outcome(
        errs.is_empty() && within(t, 600),
        format!(
            "{} exhaustive, {} axioms, {} random; {} disagreements in {:.1?}{}",
            a.len(),
            b.len(),
            c.len(),
            errs.len(),
            t,
            errs.first().map(|e| format!("; first {e}")).unwrap_or_default()
        ),
    )
}

/// The side-conjunct deletions that must leave the fragment.
fn mutants(t: &Translation) -> Vec<(&'static str, Formula)> {
    let side = t.side.as_ref().expect("side conjuncts");
    let Formula::ForallSet(zs, body) = &side.relation else { panic!("relation conjunct is a set quantifier") };
    let Formula::Implies(_, unguarded) = &**body else { panic!("relation conjunct is guarded") };
    let rebuild = |skip: usize, relation: Formula| {
        let mut parts: Vec<Formula> = vec![side.universe.clone(), side.small_sets.clone(), side.subordination.clone(), relation];
        if skip < 3 {
            parts.remove(skip);
        }
        parts.extend(t.defining.iter().cloned());
        parts.push(t.target.clone());
        Formula::and_all(parts).unwrap()
    };
    let unguarded_relation = Formula::forall_set(zs.clone(), (**unguarded).clone());
    vec![
        ("universe", rebuild(0, side.relation.clone())),
        ("small-sets", rebuild(1, side.relation.clone())),
        ("subordination", rebuild(2, side.relation.clone())),
        ("relation guard", rebuild(3, unguarded_relation)),
    ]
}

/// Random instances of the bounded-cardinality fragment.
fn def3_corpus(count: usize) -> Vec<(usize, Formula)> {
    let (u, s, a) = (Var::set("U"), Var::coll("S"), Var::coll("A"));
    let (x, y) = (Var::ind("x"), Var::ind("y"));
    let (sx, sy) = (Var::set("X"), Var::set("Y"));
    (0..count as u64)
        .map(|i| {
            let mut rng = case_rng(SEED, 900, i);
            let h = rng.gen_range(2..=3);
            let pools = Pools { inds: vec![x.clone(), y.clone()], sets: vec![sx.clone(), sy.clone()], colls: vec![a.clone()] };
            let mut parts = vec![universe_axiom(&u), small_sets_axiom(&s, h), subordination_axiom(&a, &s)];
            let member = |rng: &mut rand_chacha::ChaCha8Rng| -> Formula {
                match rng.gen_range(0..5) {
                    0 => gen::flat_atom(rng, &pools.inds, &pools.sets, &[a.clone(), s.clone()]),
                    1 => Formula::not(gen::flat_atom(rng, &pools.inds, &pools.sets, &[a.clone(), s.clone()])),
                    2 => gen::ind_quantifier(rng, &pools, h.min(2)),
                    _ => {
                        let z = Var::set("Z");
                        let linked = gen::linked_quantifier(rng, &pools, std::slice::from_ref(&z), h.min(2));
                        let item = match rng.gen_range(0..3) {
                            0 => Formula::in_coll(&z, &a),
                            1 => Formula::not(Formula::in_coll(&z, &a)),
                            _ => Formula::eq_set(&z, &sx),
                        };
                        let q = Formula::forall_set(vec![z.clone()], Formula::implies(Formula::in_coll(&z, &s), Formula::or(item, linked)));
                        if rng.gen_bool(0.3) { Formula::not(q) } else { q }
                    }
                }
            };
            for _ in 0..rng.gen_range(1..=3) {
                let m = member(&mut rng);
                let m = if rng.gen_bool(0.3) { Formula::or(m, member(&mut rng)) } else { m };
                parts.push(m);
            }
            (h, Formula::and_all(parts).unwrap())
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    // Shape recognition on translations and their mutants.
    let modal: Vec<Modal> = s5_corpus().into_iter().step_by(7).chain(random_s5_corpus()).collect();
    let mut mutants_rejected = 0;
    for phi in &modal {
        let t = translate_s5(phi, true);
        if !recognize_h(&t.formula(), 3).in_fragment {
            problems.push(format!("translation of {phi} rejected"));
        }
        for (name, m) in mutants(&t) {
            if recognize_h(&m, 3).in_fragment {
                problems.push(format!("{name} mutant of {phi} accepted"));
            } else {
                mutants_rejected += 1;
            }
        }
    }
    // Branch sizes against input size.
    let def3 = def3_corpus(300);
    let mut ratios: Vec<(usize, f64)> = Vec::new();
    for (_, f) in def3.iter() {
        for br in flatten_h(f).take(64) {
            ratios.push((f.size(), br.to_formula().size() as f64 / f.size() as f64));
        }
    }
    for phi in &modal {
        let f = translate_s5(phi, true).formula();
        for br in flatten_h(&f).take(16) {
            ratios.push((f.size(), br.to_formula().size() as f64 / f.size() as f64));
        }
    }
    let mut sizes: Vec<usize> = ratios.iter().map(|r| r.0).collect();
    sizes.sort();
    let median = sizes[sizes.len() / 2];
    let c = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let c_small = ratios.iter().filter(|r| r.0 <= median).map(|r| r.1).fold(0.0, f64::max);
    let c_large = ratios.iter().filter(|r| r.0 > median).map(|r| r.1).fold(0.0, f64::max);
    if c_large > c_small * 1.25 {
        problems.push(format!("branch ratio grows with input size: {c_small:.2} below median, {c_large:.2} above"));
    }
    // The two deciders agree where both finish.
    let opts = DecideOptions { max_domain: Some(8), ..Default::default() };
    let agreement: Vec<Result<bool, String>> = def3
        .par_iter()
        .map(|(h, f)| {
            let vh = decide_sat_h(f, *h, &opts).map_err(|e| format!("{}: {e}", render(f)))?;
            let vg = match decide_sat(f, &opts) {
                Ok(v) => v,
                Err(_) => return Ok(false),
            };
            if vh.status == Status::Unknown || vg.status == Status::Unknown {
                return Ok(false);
            }
            if vh.status != vg.status {
                return Err(format!("h-decider {:?}, general {:?} on {}", vh.status, vg.status, render(f)));
            }
            Ok(true)
        })
        .collect();
    let compared = agreement.iter().filter(|r| matches!(r, Ok(true))).count();
    problems.extend(agreement.into_iter().filter_map(Result::err));
    if compared == 0 {
        problems.push("no instance small enough for both deciders".into());
    }
    let t = start.elapsed();
    outcome(
        problems.is_empty(),
        format!(
            "{} translations, {mutants_rejected} mutants rejected; branch ratio c = {c:.2} ({c_small:.2} / {c_large:.2} by size); {compared}/{} instances compared in {:.1?}{}",
            modal.len(),
            def3.len(),
            t,
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let corpus = small_corpus(1000, 500);
    let results: Vec<Result<(), String>> = corpus
        .par_iter()
        .map(|f| {
            let conjs = normalize(f, &NormalizeOptions::default()).map_err(|e| e.to_string())?;
            let whole = brute_force_sat(f, 3, ORACLE_BUDGET);
            let mut parts = Vec::new();
            for c in &conjs {
                parts.push(brute_force_sat(&c.to_formula(), 3, ORACLE_BUDGET));
            }
            if matches!(whole, Oracle::Unknown) || parts.iter().any(|p| matches!(p, Oracle::Unknown)) {
                return Err(format!("oracle budget exhausted on {}", render(f)));
            }
            if whole.is_sat() != parts.iter().any(Oracle::is_sat) {
                return Err(format!("{} is {} but its normal form is not", render(f), whole.is_sat()));
            }
            Ok(())
        })
        .collect();
    let t = start.elapsed();
    let errs: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    outcome(
        errs.is_empty(),
        format!("{}/{} agree in {:.1?}{}", results.len() - errs.len(), results.len(), t, errs.first().map(|e| format!("; {e}")).unwrap_or_default()),
    )
}

fn main() {
    let wanted: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "small-model construction", criterion_1),
        (2, "subdomain bound", criterion_2),
        (3, "restriction lemmas", criterion_3),
        (4, "decider vs brute force", criterion_4),
        (5, "separators", criterion_5),
        (6, "restriction certification", criterion_6),
        (7, "encoding fidelity", criterion_7),
        (8, "S5 end to end", criterion_8),
        (9, "bounded-cardinality fragment", criterion_9),
        (10, "normalizer equisatisfiability", criterion_10),
    ];
    let mut failed = 0;
    for (k, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&k) {
            continue;
        }
        let o = run();
        println!("criterion {k:>2} [{name}]: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
