//! Small models: restricting an interpretation to a chosen subdomain.
//!
//! Given a subdomain `D'` containing a default element `d'` and a set `V` of
//! set variables, individual variables are sent to themselves when inside
//! `D'` and to `d'` otherwise, sets are intersected with `D'`, and a collection
//! keeps its members inside `D'` except that the restricted value of each
//! `X in V` is present exactly when the original value of `X` was.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::elemset::ElemSet;
use crate::formulas::{render, Formula, Sort, Var};
use crate::normalizer::NormalizedConjunction;
use crate::semantics::{evaluate, evaluate_under, Interpretation, SemanticsError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelativizeError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("subdomain is empty")]
    EmptySubdomain,
    #[error("subdomain is not contained in the domain")]
    OutsideDomain,
    #[error("default element {0} is not in the subdomain")]
    BadDefault(usize),
    #[error("the interpretation does not satisfy the conjunction")]
    NotAModel,
}

#[derive(Clone, Debug, Default)]
pub struct RelativizeConfig {
    /// Set variables whose membership in collections is preserved.
    pub preserved_sets: BTreeSet<Var>,
    /// Default element; the least element of the subdomain when `None`.
    pub default_elem: Option<usize>,
}

/// The restricted interpretation, renumbered onto `0..k`.
#[derive(Clone, Debug)]
pub struct Relativized {
    pub interpretation: Interpretation,
    /// `index_map[i]` is the original element renumbered to `i`.
    pub index_map: Vec<usize>,
    pub default_elem: usize,
}

impl Relativized {
    /// The new index of an original element, if it survived.
    pub fn map_elem(&self, e: usize) -> Option<usize> {
        self.index_map.binary_search(&e).ok()
    }

    /// Restricts and renumbers a set of original elements.
    pub fn map_set(&self, s: &ElemSet) -> ElemSet {
        s.iter().filter_map(|e| self.map_elem(e)).collect()
    }
}

/// Applies the restriction with respect to `subdomain`.
pub fn relativize(
    m: &Interpretation,
    subdomain: &ElemSet,
    cfg: &RelativizeConfig,
) -> Result<Relativized, RelativizeError> {
    if subdomain.is_empty() {
        return Err(RelativizeError::EmptySubdomain);
    }
    if !subdomain.within(m.domain_size()) {
        return Err(RelativizeError::OutsideDomain);
    }
    let dflt = cfg.default_elem.unwrap_or_else(|| subdomain.min_elem().expect("non-empty"));
    if !subdomain.contains(dflt) {
        return Err(RelativizeError::BadDefault(dflt));
    }
    let index_map: Vec<usize> = subdomain.iter().collect();
    let mut out = Relativized {
        interpretation: Interpretation::new(index_map.len())?,
        index_map,
        default_elem: dflt,
    };
    let mut res = Interpretation::new(out.index_map.len())?;
    for (name, e) in m.inds() {
        let img = out.map_elem(e).unwrap_or_else(|| out.map_elem(dflt).expect("default kept"));
        res.set_ind(name, img)?;
    }
    for (name, s) in m.sets() {
        res.set_set(name, out.map_set(s))?;
    }
    // Original and restricted values of the preserved set variables.
    let preserved: Vec<(ElemSet, ElemSet)> = cfg
        .preserved_sets
        .iter()
        .filter_map(|v| m.set(v.name()))
        .map(|s| (s.clone(), s.intersection(subdomain)))
        .collect();
    let images: BTreeSet<&ElemSet> = preserved.iter().map(|(_, r)| r).collect();
    for (name, c) in m.colls() {
        let mut kept: BTreeSet<ElemSet> = c
            .iter()
            .filter(|u| u.is_subset(subdomain) && !images.contains(u))
            .cloned()
            .collect();
        for (orig, restricted) in &preserved {
            if c.contains(orig) {
                kept.insert(restricted.clone());
            }
        }
        res.set_coll(name, kept.iter().map(|u| out.map_set(u)).collect())?;
    }
    out.interpretation = res;
    Ok(out)
}

/// Why an element belongs to the constructed subdomain. The first reason
/// found is kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Value of an individual variable.
    IndividualValue { var: String },
    /// Separates the values of two set variables.
    Separator { left: String, right: String },
    /// Part of the first tuple falsifying a nested quantifier instance.
    Counterexample { quantifier: String, instance: Vec<String>, position: usize },
    /// Added so that the subdomain is non-empty.
    Filler,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainWitnessSet {
    pub elements: BTreeMap<usize, Provenance>,
}

impl DomainWitnessSet {
    pub fn as_set(&self) -> ElemSet {
        self.elements.keys().copied().collect()
    }

    fn add(&mut self, e: usize, p: Provenance) {
        self.elements.entry(e).or_insert(p);
    }
}

/// Elements separating the values of the given set variables: after the
/// call, any two variables with different values differ on some chosen
/// element. At most `k - 1` elements for `k` variables.
pub fn distinguish(m: &Interpretation, sets: &[Var]) -> Vec<(usize, String, String)> {
    let vals: Vec<(&Var, ElemSet)> =
        sets.iter().filter_map(|v| m.set(v.name()).map(|s| (v, s.clone()))).collect();
    let mut chosen = Vec::new();
    // Partition refinement: split a class whose members still differ.
    let mut classes: Vec<Vec<usize>> = vec![(0..vals.len()).collect()];
    loop {
        let mut split = None;
        'outer: for (ci, cls) in classes.iter().enumerate() {
            for (a, &i) in cls.iter().enumerate() {
                for &j in &cls[a + 1..] {
                    if vals[i].1 != vals[j].1 {
                        split = Some((ci, i, j));
                        break 'outer;
                    }
                }
            }
        }
        let Some((ci, i, j)) = split else { break };
        let e = vals[i].1.symmetric_difference(&vals[j].1).min_elem().expect("sets differ");
        chosen.push((e, vals[i].0.name().to_string(), vals[j].0.name().to_string()));
        let cls = classes.swap_remove(ci);
        let (inside, outside): (Vec<usize>, Vec<usize>) = cls.into_iter().partition(|&k| vals[k].1.contains(e));
        classes.push(inside);
        classes.push(outside);
    }
    chosen
}

/// Builds a subdomain on which the restriction of `m` still satisfies `conj`:
/// values of individual variables, separators for set variables, and for
/// every nested individual quantifier and every assignment of free set
/// variables to its set arguments, a tuple falsifying the instance when the
/// instance is false.
pub fn build_d_star(m: &Interpretation, conj: &NormalizedConjunction) -> Result<DomainWitnessSet, RelativizeError> {
    if !evaluate(m, &conj.to_formula())? {
        return Err(RelativizeError::NotAModel);
    }
    let mut ws = DomainWitnessSet { elements: BTreeMap::new() };
    for v in conj.inventory.free(Sort::Individual) {
        let e = m.ind(v.name()).ok_or_else(|| SemanticsError::Unassigned(v.name().into()))?;
        ws.add(e, Provenance::IndividualValue { var: v.name().into() });
    }
    let sets: Vec<Var> = conj.inventory.free(Sort::Set).iter().cloned().collect();
    for (e, l, r) in distinguish(m, &sets) {
        ws.add(e, Provenance::Separator { left: l, right: r });
    }
    for nq in &conj.nested {
        let Formula::ForallInd(zs, body) = &nq.atom else { continue };
        let k = nq.set_args.len();
        if sets.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; k];
        loop {
            let map: HashMap<Var, Var> =
                nq.set_args.iter().cloned().zip(choice.iter().map(|&c| sets[c].clone())).collect();
            let inst = body.substitute(&map);
            if let Some(tuple) = first_falsifier(m, zs, &inst)? {
                let names: Vec<String> = choice.iter().map(|&c| sets[c].name().to_string()).collect();
                for (pos, e) in tuple.into_iter().enumerate() {
                    ws.add(
                        e,
                        Provenance::Counterexample {
                            quantifier: render(&nq.atom),
                            instance: names.clone(),
                            position: pos,
                        },
                    );
                }
            }
            if !advance(&mut choice, sets.len()) {
                break;
            }
        }
    }
    if ws.elements.is_empty() {
        ws.add(0, Provenance::Filler);
    }
    Ok(ws)
}

/// Cap on the number of candidate values tried by [`extend_to_model`].
pub const EXTENSION_LIMIT: u64 = 1 << 16;

/// Extends `m` to the variables of `conj` it leaves unassigned, typically the
/// witnesses introduced for negated quantifiers, so that `conj` holds. Values
/// are tried in lexicographic order; `None` when no extension within
/// [`EXTENSION_LIMIT`] candidates works.
pub fn extend_to_model(m: &Interpretation, conj: &NormalizedConjunction) -> Result<Option<Interpretation>, RelativizeError> {
    let f = conj.to_formula();
    let missing: Vec<Var> = f.free_vars().into_iter().filter(|v| m.value(v).is_none()).collect();
    let n = m.domain_size();
    let mut radix = Vec::new();
    let mut total: u64 = 1;
    for v in &missing {
        let r = match v.sort() {
            Sort::Individual => n as u64,
            Sort::Set if n < 63 => 1u64 << n,
            _ => return Ok(None),
        };
        total = total.saturating_mul(r);
        radix.push(r as usize);
    }
    if total > EXTENSION_LIMIT {
        return Ok(None);
    }
    let mut t = vec![0usize; missing.len()];
    loop {
        let mut ext = m.clone();
        for (v, &x) in missing.iter().zip(&t) {
            match v.sort() {
                Sort::Individual => ext.set_ind(v.name(), x)?,
                _ => ext.set_set(v.name(), ElemSet::from_mask(x as u64))?,
            }
        }
        if evaluate(&ext, &f)? {
            return Ok(Some(ext));
        }
        if !advance_mixed(&mut t, &radix) {
            return Ok(None);
        }
    }
}

fn advance_mixed(t: &mut [usize], radix: &[usize]) -> bool {
    for (x, &r) in t.iter_mut().zip(radix).rev() {
        *x += 1;
        if *x < r {
            return true;
        }
        *x = 0;
    }
    false
}

/// Lexicographically first tuple falsifying `body`, if any.
fn first_falsifier(m: &Interpretation, zs: &[Var], body: &Formula) -> Result<Option<Vec<usize>>, SemanticsError> {
    let n = m.domain_size();
    let mut t = vec![0usize; zs.len()];
    loop {
        let binds: Vec<(Var, usize)> = zs.iter().cloned().zip(t.iter().copied()).collect();
        if !evaluate_under(m, &binds, &[], body)? {
            return Ok(Some(t));
        }
        if !advance(&mut t, n) {
            return Ok(None);
        }
    }
}

fn advance(t: &mut [usize], n: usize) -> bool {
    for x in t.iter_mut().rev() {
        *x += 1;
        if *x < n {
            return true;
        }
        *x = 0;
    }
    false
}

/// Parameters of the model-size bound for one normalized conjunction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub individuals: u64,
    pub sets: u64,
    pub nested: u64,
    pub max_set_prefix: u32,
    pub max_nested_prefix: u64,
}

impl BoundParams {
    /// `individuals + (sets - 1) + sets^max_set_prefix * max_nested_prefix * nested`,
    /// saturating, and at least 1.
    pub fn value(&self) -> u64 {
        let sep = self.sets.saturating_sub(1);
        let tuples = self
            .sets
            .saturating_pow(self.max_set_prefix)
            .saturating_mul(self.max_nested_prefix)
            .saturating_mul(self.nested);
        self.individuals.saturating_add(sep).saturating_add(tuples).max(1)
    }
}

pub fn bound_params(conj: &NormalizedConjunction) -> BoundParams {
    BoundParams {
        individuals: conj.inventory.free(Sort::Individual).len() as u64,
        sets: conj.inventory.free(Sort::Set).len() as u64,
        nested: conj.nested.len() as u64,
        max_set_prefix: conj.max_set_prefix() as u32,
        max_nested_prefix: conj.max_nested_prefix() as u64,
    }
}

/// Upper bound on the size of the subdomain built by [`build_d_star`], hence
/// on the size of a smallest model of a satisfiable conjunction.
pub fn bound(conj: &NormalizedConjunction) -> u64 {
    bound_params(conj).value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::parse;
    use crate::normalizer::{normalize, NormalizeOptions};

    fn conj(s: &str) -> NormalizedConjunction {
        normalize(&parse(s).unwrap(), &NormalizeOptions::default()).unwrap().remove(0)
    }

    #[test]
    fn distinguish_separates_all_pairs() {
        let mut m = Interpretation::new(6).unwrap();
        m.set_set("X", [0, 1, 2].into_iter().collect()).unwrap();
        m.set_set("Y", [0, 1].into_iter().collect()).unwrap();
        m.set_set("Z", [3].into_iter().collect()).unwrap();
        m.set_set("W", [0, 1].into_iter().collect()).unwrap();
        let vars: Vec<Var> = ["X", "Y", "Z", "W"].iter().map(|n| Var::set(n)).collect();
        let d: ElemSet = distinguish(&m, &vars).into_iter().map(|(e, _, _)| e).collect();
        assert!(d.len() <= 3);
        for a in &vars {
            for b in &vars {
                let (sa, sb) = (m.set(a.name()).unwrap(), m.set(b.name()).unwrap());
                if sa != sb {
                    assert!(!sa.symmetric_difference(sb).intersection(&d).is_empty());
                }
            }
        }
    }

    #[test]
    fn relativization_preserves_membership_of_listed_sets() {
        let mut m = Interpretation::new(4).unwrap();
        m.set_set("X", [0, 3].into_iter().collect()).unwrap();
        m.set_coll("A", [ElemSet::from_mask(0b1001), ElemSet::from_mask(0b0001)].into_iter().collect()).unwrap();
        let cfg = RelativizeConfig { preserved_sets: [Var::set("X")].into_iter().collect(), default_elem: None };
        let sub: ElemSet = [0, 1].into_iter().collect();
        let r = relativize(&m, &sub, &cfg).unwrap();
        // X restricts to {0}, which is in A because X was.
        assert_eq!(r.interpretation.set("X"), Some(&ElemSet::from_mask(1)));
        assert!(r.interpretation.coll("A").unwrap().contains(&ElemSet::from_mask(1)));
        // Without preservation the member {0} survives on its own; {0,3} is dropped.
        let r2 = relativize(&m, &sub, &RelativizeConfig::default()).unwrap();
        assert_eq!(r2.interpretation.coll("A").unwrap().len(), 1);
    }

    #[test]
    fn small_bound_values() {
        let c = conj("x in X & (forall Z)(Z in A -> (forall z)(z in Z -> z in X))");
        let p = bound_params(&c);
        assert_eq!((p.individuals, p.sets, p.nested, p.max_set_prefix, p.max_nested_prefix), (1, 1, 1, 1, 1));
        assert_eq!(bound(&c), 2);
    }

    #[test]
    fn d_star_records_counterexamples() {
        let c = conj("(forall Z)(Z in A -> (forall z1 z2)(z1 in Z & z2 in Z -> z1 = z2)) & !(X in A) & Y in A");
        let mut m = Interpretation::new(5).unwrap();
        m.set_set("X", [1, 4].into_iter().collect()).unwrap();
        m.set_set("Y", [1].into_iter().collect()).unwrap();
        m.set_coll("A", [ElemSet::from_mask(0b10)].into_iter().collect()).unwrap();
        let ws = build_d_star(&m, &c).unwrap();
        assert!(ws.elements.values().any(|p| matches!(p, Provenance::Counterexample { .. })));
        // 4 separates X from Y; 1 comes from the falsifying pair (1, 4) of the
        // nested quantifier instantiated at X.
        assert!(matches!(ws.elements[&4], Provenance::Separator { .. }));
        assert!(matches!(ws.elements[&1], Provenance::Counterexample { position: 0, .. }));
        assert!(ws.elements.len() as u64 <= bound(&c));
    }
}
