//! Seeded random generators for interpretations and formulas.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::elemset::ElemSet;
use crate::formulas::{Formula, Var};
use crate::restriction::link_conjunction;
use crate::semantics::{evaluate, Interpretation};

/// Deterministic generator for case `index` of stream `stream`.
pub fn case_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos(u128::from(index) << 20);
    ChaCha8Rng::seed_from_u64(r.gen())
}

/// Free variables available to a generator.
#[derive(Clone, Debug)]
pub struct Pools {
    pub inds: Vec<Var>,
    pub sets: Vec<Var>,
    pub colls: Vec<Var>,
}

impl Pools {
    /// `x, y`, `X, Y` and `A, B`, truncated to `k` per sort.
    pub fn standard(k: usize) -> Self {
        Pools::sized(k, k, k)
    }

    pub fn sized(inds: usize, sets: usize, colls: usize) -> Self {
        let take = |names: &[&str], k: usize, mk: fn(&str) -> Var| names.iter().take(k).map(|n| mk(n)).collect();
        Pools {
            inds: take(&["x", "y", "w", "v"], inds, Var::ind),
            sets: take(&["X", "Y", "W", "V", "T"], sets, Var::set),
            colls: take(&["A", "B", "C"], colls, Var::coll),
        }
    }
}

/// Bounds for [`random_formula`].
#[derive(Clone, Debug)]
pub struct FormulaShape {
    pub pools: Pools,
    /// Longest quantifier prefix of either sort.
    pub max_prefix: usize,
    /// Depth of the propositional skeleton.
    pub depth: usize,
    pub set_quantifiers: bool,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape { pools: Pools::standard(2), max_prefix: 2, depth: 2, set_quantifiers: true }
    }
}

/// A random interpretation over `n` elements for the given variables.
/// Collections contain each set value with probability 1/2 and every other
/// subset with probability 1/5.
pub fn random_interpretation(rng: &mut impl Rng, n: usize, pools: &Pools) -> Interpretation {
    let mut m = Interpretation::new(n).expect("n > 0");
    for v in &pools.inds {
        m.set_ind(v.name(), rng.gen_range(0..n)).expect("in range");
    }
    let mut values = Vec::new();
    for v in &pools.sets {
        let s = random_subset(rng, n);
        values.push(s.clone());
        m.set_set(v.name(), s).expect("in range");
    }
    for v in &pools.colls {
        let mut c = BTreeSet::new();
        for mask in 0..(1u64 << n) {
            let s = ElemSet::from_mask(mask);
            let p = if values.contains(&s) { 0.5 } else { 0.2 };
            if rng.gen_bool(p) {
                c.insert(s);
            }
        }
        m.set_coll(v.name(), c).expect("in range");
    }
    m
}

pub fn random_subset(rng: &mut impl Rng, n: usize) -> ElemSet {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

pub fn binders(stem: &str, k: usize, mk: fn(&str) -> Var) -> Vec<Var> {
    (1..=k).map(|i| mk(&format!("{stem}{i}"))).collect()
}

fn maybe_not(rng: &mut impl Rng, f: Formula) -> Formula {
    if rng.gen_bool(0.5) {
        Formula::not(f)
    } else {
        f
    }
}

/// A random atom of level 0 over the given variables.
pub fn flat_atom(rng: &mut impl Rng, inds: &[Var], sets: &[Var], colls: &[Var]) -> Formula {
    loop {
        match rng.gen_range(0..4) {
            0 if !inds.is_empty() => {
                return Formula::eq_ind(inds.choose(rng).unwrap(), inds.choose(rng).unwrap())
            }
            1 if !inds.is_empty() && !sets.is_empty() => {
                return Formula::in_set(inds.choose(rng).unwrap(), sets.choose(rng).unwrap())
            }
            2 if !sets.is_empty() => {
                return Formula::eq_set(sets.choose(rng).unwrap(), sets.choose(rng).unwrap())
            }
            3 if !sets.is_empty() && !colls.is_empty() => {
                return Formula::in_coll(sets.choose(rng).unwrap(), colls.choose(rng).unwrap())
            }
            _ if inds.is_empty() && sets.is_empty() => panic!("no variables to build an atom from"),
            _ => {}
        }
    }
}

/// Disjunction of 1 to 3 signed individual-level atoms.
fn ind_clause(rng: &mut impl Rng, inds: &[Var], sets: &[Var]) -> Formula {
    let k = rng.gen_range(1..=3);
    Formula::or_all((0..k).map(|_| {
        let a = if sets.is_empty() || rng.gen_bool(0.3) {
            Formula::eq_ind(inds.choose(rng).unwrap(), inds.choose(rng).unwrap())
        } else {
            Formula::in_set(inds.choose(rng).unwrap(), sets.choose(rng).unwrap())
        };
        maybe_not(rng, a)
    }))
    .expect("k >= 1")
}

/// `(forall z1..zk)` over a clause mentioning at least one bound variable.
pub fn ind_quantifier(rng: &mut impl Rng, pools: &Pools, max_prefix: usize) -> Formula {
    let zs = binders("z", rng.gen_range(1..=max_prefix), Var::ind);
    let inds: Vec<Var> = zs.iter().chain(&pools.inds).cloned().collect();
    let head = Formula::in_set(zs.choose(rng).unwrap(), pick_set(rng, &pools.sets));
    let head = maybe_not(rng, head);
    let body = Formula::or(head, ind_clause(rng, &inds, &pools.sets));
    Formula::forall_ind(zs, body)
}

fn pick_set<'a>(rng: &mut impl Rng, sets: &'a [Var]) -> &'a Var {
    sets.choose(rng).expect("a set variable")
}

/// A level-1 quantifier linked to the set binders `outer`: its body reads
/// `link -> clause`, so the link condition holds by the schema.
pub fn linked_quantifier(rng: &mut impl Rng, pools: &Pools, outer: &[Var], max_prefix: usize) -> Formula {
    let zs = binders("z", rng.gen_range(1..=max_prefix), Var::ind);
    let inds: Vec<Var> = zs.iter().chain(&pools.inds).cloned().collect();
    let sets: Vec<Var> = outer.iter().chain(&pools.sets).cloned().collect();
    let body = Formula::implies(link_conjunction(&zs, outer), ind_clause(rng, &inds, &sets));
    Formula::forall_ind(zs, body)
}

/// `(forall Z1..Zm)(guard -> consequent)` where the guard puts every bound
/// variable in a collection and the consequent may hold linked quantifiers.
pub fn set_quantifier(rng: &mut impl Rng, pools: &Pools, max_prefix: usize) -> Formula {
    let zs = binders("Z", rng.gen_range(1..=max_prefix), Var::set);
    let guard = Formula::and_all(zs.iter().map(|z| Formula::in_coll(z, pools.colls.choose(rng).unwrap())))
        .expect("non-empty prefix");
    let sets: Vec<Var> = zs.iter().chain(&pools.sets).cloned().collect();
    let k = rng.gen_range(1..=2);
    let mut items = Vec::new();
    for _ in 0..k {
        let item = match rng.gen_range(0..4) {
            0 | 1 => linked_quantifier(rng, pools, &zs, max_prefix),
            2 => Formula::in_coll(zs.choose(rng).unwrap(), pools.colls.choose(rng).unwrap()),
            _ => Formula::eq_set(zs.choose(rng).unwrap(), sets.choose(rng).unwrap()),
        };
        items.push(maybe_not(rng, item));
    }
    let consequent = Formula::or_all(items).expect("k >= 1");
    Formula::forall_set(zs, Formula::implies(guard, consequent))
}

/// A random restricted formula: a propositional skeleton of the given depth
/// over flat atoms and quantified atoms.
pub fn random_formula(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    fn go(rng: &mut impl Rng, s: &FormulaShape, depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.25) {
            let p = &s.pools;
            return match rng.gen_range(0..6) {
                0 if s.set_quantifiers && !p.colls.is_empty() && !p.sets.is_empty() => {
                    set_quantifier(rng, p, s.max_prefix)
                }
                1 if !p.sets.is_empty() => ind_quantifier(rng, p, s.max_prefix),
                _ => flat_atom(rng, &p.inds, &p.sets, &p.colls),
            };
        }
        match rng.gen_range(0..5) {
            0 => Formula::not(go(rng, s, depth - 1)),
            1 | 2 => Formula::and(go(rng, s, depth - 1), go(rng, s, depth - 1)),
            3 => Formula::or(go(rng, s, depth - 1), go(rng, s, depth - 1)),
            _ => Formula::implies(go(rng, s, depth - 1), go(rng, s, depth - 1)),
        }
    }
    go(rng, shape, shape.depth)
}

/// A conjunction of literals true in `m`: flat literals with the polarity `m`
/// gives them, plus up to one individual and two set quantifiers that `m`
/// satisfies, each found within a few attempts.
pub fn satisfied_conjunction(rng: &mut impl Rng, m: &Interpretation, pools: &Pools, max_prefix: usize) -> Formula {
    let mut parts = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let a = flat_atom(rng, &pools.inds, &pools.sets, &pools.colls);
        let truth = evaluate(m, &a).expect("total interpretation");
        parts.push(if truth { a } else { Formula::not(a) });
    }
    let want_ind = rng.gen_range(0..=1);
    let want_set = rng.gen_range(1..=2);
    for (want, set_level) in [(want_ind, false), (want_set, true)] {
        let mut got = 0;
        for _ in 0..12 {
            if got == want {
                break;
            }
            let q = if set_level {
                set_quantifier(rng, pools, max_prefix)
            } else {
                ind_quantifier(rng, pools, max_prefix)
            };
            if evaluate(m, &q).expect("total interpretation") {
                parts.push(q);
                got += 1;
            }
        }
    }
    Formula::and_all(parts).expect("at least one flat literal")
}
