//! Formulas expressing common set-theoretic constructs.

use crate::decider::hfrag::fewer_than;
use crate::formulas::{Formula, FreshNames, Sort, Var};

/// A constraint on set and collection variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Construct {
    /// `X ⊆ Y`
    SetSubset(Var, Var),
    /// `X = Y ∪ Z`
    SetUnion(Var, Var, Var),
    /// `X = Y ∩ Z`
    SetIntersection(Var, Var, Var),
    /// `X` is the complement of `Y`
    SetComplement(Var, Var),
    SetEmpty(Var),
    SetFull(Var),
    /// `X = {x}`
    SetSingleton(Var, Var),
    CollEqual(Var, Var),
    CollSubset(Var, Var),
    /// `A = B ∩ C`
    CollIntersection(Var, Var, Var),
    /// `A = B ∪ C`
    CollUnion(Var, Var, Var),
    CollComplement(Var, Var),
    CollEmpty(Var),
    CollFull(Var),
    /// `A = {X}`
    CollSingleton(Var, Var),
    /// `A` is the powerset of `X`.
    Powerset(Var, Var),
    /// Subsets of `X` with at most `h` elements.
    PowAtMost(Var, Var, usize),
    /// Subsets of `X` with fewer than `h` elements.
    PowFewer(Var, Var, usize),
    /// Subsets of `X` with exactly `h` elements.
    PowExactly(Var, Var, usize),
    /// Sets `Z` such that every `n`-tuple drawn from `Z` lies in
    /// `X1 × ... × Xn`, with at most `n` elements.
    Cartesian(Var, Vec<Var>),
    /// Subsets of the union of the `Xi` meeting every `Xi`.
    PowStar(Var, Vec<Var>),
}

impl Construct {
    pub fn kind(&self) -> &'static str {
        use Construct::*;
        match self {
            SetSubset(..) => "set-subset",
            SetUnion(..) => "set-union",
            SetIntersection(..) => "set-intersection",
            SetComplement(..) => "set-complement",
            SetEmpty(..) => "set-empty",
            SetFull(..) => "set-full",
            SetSingleton(..) => "set-singleton",
            CollEqual(..) => "coll-equal",
            CollSubset(..) => "coll-subset",
            CollIntersection(..) => "coll-intersection",
            CollUnion(..) => "coll-union",
            CollComplement(..) => "coll-complement",
            CollEmpty(..) => "coll-empty",
            CollFull(..) => "coll-full",
            CollSingleton(..) => "coll-singleton",
            Powerset(..) => "powerset",
            PowAtMost(..) => "pow-le-h",
            PowFewer(..) => "pow-lt-h",
            PowExactly(..) => "pow-eq-h",
            Cartesian(..) => "cartesian",
            PowStar(..) => "pow-star",
        }
    }

    /// Every value returned by [`Construct::kind`].
    pub const KINDS: [&'static str; 21] = [
        "set-subset",
        "set-union",
        "set-intersection",
        "set-complement",
        "set-empty",
        "set-full",
        "set-singleton",
        "coll-equal",
        "coll-subset",
        "coll-intersection",
        "coll-union",
        "coll-complement",
        "coll-empty",
        "coll-full",
        "coll-singleton",
        "powerset",
        "pow-le-h",
        "pow-lt-h",
        "pow-eq-h",
        "cartesian",
        "pow-star",
    ];

    /// Builds a construct from its kind and the names of its parameters, in
    /// the order of the variant's fields. `h` is required by the three
    /// bounded powersets and rejected otherwise.
    pub fn from_kind(kind: &str, names: &[&str], h: Option<usize>) -> Result<Construct, String> {
        use Construct::*;
        let arity = |k: usize| {
            if names.len() == k {
                Ok(())
            } else {
                Err(format!("`{kind}` takes {k} variable(s), got {}", names.len()))
            }
        };
        let needs_h = matches!(kind, "pow-le-h" | "pow-lt-h" | "pow-eq-h");
        let h = match (needs_h, h) {
            (true, Some(h)) => h,
            (true, None) => return Err(format!("`{kind}` needs a value for h")),
            (false, Some(_)) => return Err(format!("`{kind}` takes no h")),
            (false, None) => 0,
        };
        // The text format tells sorts apart by the case of the first letter.
        let singleton_ind = matches!(kind, "set-singleton").then_some(1);
        for (i, n) in names.iter().enumerate() {
            let upper = n.chars().next().is_some_and(|c| c.is_ascii_uppercase());
            if upper == (Some(i) == singleton_ind) {
                let want = if upper { "lowercase" } else { "uppercase" };
                return Err(format!("`{n}` must start with an {want} letter"));
            }
        }
        let s = |i: usize| Var::set(names[i]);
        let a = |i: usize| Var::coll(names[i]);
        let c = match kind {
            "set-subset" | "set-complement" => {
                arity(2)?;
                if kind == "set-subset" { SetSubset(s(0), s(1)) } else { SetComplement(s(0), s(1)) }
            }
            "set-union" | "set-intersection" => {
                arity(3)?;
                if kind == "set-union" { SetUnion(s(0), s(1), s(2)) } else { SetIntersection(s(0), s(1), s(2)) }
            }
            "set-empty" | "set-full" => {
                arity(1)?;
                if kind == "set-empty" { SetEmpty(s(0)) } else { SetFull(s(0)) }
            }
            "set-singleton" => {
                arity(2)?;
                SetSingleton(s(0), Var::ind(names[1]))
            }
            "coll-equal" | "coll-subset" | "coll-complement" => {
                arity(2)?;
                match kind {
                    "coll-equal" => CollEqual(a(0), a(1)),
                    "coll-subset" => CollSubset(a(0), a(1)),
                    _ => CollComplement(a(0), a(1)),
                }
            }
            "coll-intersection" | "coll-union" => {
                arity(3)?;
                if kind == "coll-union" { CollUnion(a(0), a(1), a(2)) } else { CollIntersection(a(0), a(1), a(2)) }
            }
            "coll-empty" | "coll-full" => {
                arity(1)?;
                if kind == "coll-empty" { CollEmpty(a(0)) } else { CollFull(a(0)) }
            }
            "coll-singleton" | "powerset" | "pow-le-h" | "pow-lt-h" | "pow-eq-h" => {
                arity(2)?;
                match kind {
                    "coll-singleton" => CollSingleton(a(0), s(1)),
                    "powerset" => Powerset(a(0), s(1)),
                    "pow-le-h" => PowAtMost(a(0), s(1), h),
                    "pow-lt-h" => PowFewer(a(0), s(1), h),
                    _ => PowExactly(a(0), s(1), h),
                }
            }
            "cartesian" | "pow-star" => {
                if names.len() < 2 {
                    return Err(format!("`{kind}` takes a collection and at least one set"));
                }
                let xs = (1..names.len()).map(s).collect();
                if kind == "cartesian" { Cartesian(a(0), xs) } else { PowStar(a(0), xs) }
            }
            _ => return Err(format!("unknown kind `{kind}`")),
        };
        Ok(c)
    }

    fn params(&self) -> Vec<&Var> {
        use Construct::*;
        match self {
            SetEmpty(a) | SetFull(a) | CollEmpty(a) | CollFull(a) => vec![a],
            SetSubset(a, b)
            | SetComplement(a, b)
            | SetSingleton(a, b)
            | CollEqual(a, b)
            | CollSubset(a, b)
            | CollComplement(a, b)
            | CollSingleton(a, b)
            | Powerset(a, b)
            | PowAtMost(a, b, _)
            | PowFewer(a, b, _)
            | PowExactly(a, b, _) => vec![a, b],
            SetUnion(a, b, c) | SetIntersection(a, b, c) | CollIntersection(a, b, c) | CollUnion(a, b, c) => {
                vec![a, b, c]
            }
            Cartesian(a, xs) | PowStar(a, xs) => std::iter::once(a).chain(xs.iter()).collect(),
        }
    }

    /// The defining formula. Bound variables are chosen to avoid the
    /// parameters' names.
    pub fn encode(&self) -> Formula {
        use Construct::*;
        let mut names = FreshNames::default();
        for v in self.params() {
            names.reserve(v);
        }
        let mut bind = |stem: &str, sort: Sort| {
            if names.is_used(stem) {
                names.fresh(stem, sort)
            } else {
                let v = Var::new(stem, sort);
                names.reserve(&v);
                v
            }
        };
        let z = bind("z", Sort::Individual);
        let zz = bind("Z", Sort::Set);
        let each_z = |body: Formula| Formula::forall_ind(vec![z.clone()], body);
        let each_set = |body: Formula| Formula::forall_set(vec![zz.clone()], body);
        let m = |s: &Var| Formula::in_set(&z, s);
        let c = |a: &Var| Formula::in_coll(&zz, a);
        let subset_of = |x: &Var| Formula::forall_ind(vec![z.clone()], Formula::implies(Formula::in_set(&z, &zz), Formula::in_set(&z, x)));
        let fewer = |h: usize| -> Formula {
            if h == 0 {
                Formula::not(Formula::eq_set(&zz, &zz))
            } else {
                fewer_than(h, &zz)
            }
        };
        match self {
            SetSubset(x, y) => each_z(Formula::implies(m(x), m(y))),
            SetUnion(x, y, w) => each_z(Formula::iff(Formula::or(m(y), m(w)), m(x))),
            SetIntersection(x, y, w) => each_z(Formula::iff(Formula::and(m(y), m(w)), m(x))),
            SetComplement(x, y) => each_z(Formula::iff(m(x), Formula::not(m(y)))),
            SetEmpty(x) => each_z(Formula::not(m(x))),
            SetFull(x) => each_z(m(x)),
            SetSingleton(x, e) => each_z(Formula::iff(m(x), Formula::eq_ind(&z, e))),
            CollEqual(a, b) => each_set(Formula::iff(c(a), c(b))),
            CollSubset(a, b) => each_set(Formula::implies(c(a), c(b))),
            CollIntersection(a, b, d) => each_set(Formula::iff(Formula::and(c(b), c(d)), c(a))),
            CollUnion(a, b, d) => each_set(Formula::iff(Formula::or(c(b), c(d)), c(a))),
            CollComplement(a, b) => each_set(Formula::iff(c(a), Formula::not(c(b)))),
            CollEmpty(a) => each_set(Formula::not(c(a))),
            CollFull(a) => each_set(c(a)),
            CollSingleton(a, x) => each_set(Formula::iff(c(a), Formula::eq_set(&zz, x))),
            Powerset(a, x) => each_set(Formula::iff(c(a), subset_of(x))),
            PowAtMost(a, x, h) => each_set(Formula::iff(c(a), Formula::and(subset_of(x), fewer(h + 1)))),
            PowFewer(a, x, h) => each_set(Formula::iff(c(a), Formula::and(subset_of(x), fewer(*h)))),
            PowExactly(a, x, h) => {
                let body = if *h == 0 {
                    Formula::and(subset_of(x), fewer(1))
                } else {
                    Formula::and(Formula::and(subset_of(x), fewer(h + 1)), Formula::not(fewer(*h)))
                };
                each_set(Formula::iff(c(a), body))
            }
            Cartesian(a, xs) => {
                let n = xs.len();
                let zs: Vec<Var> = (1..=n).map(|i| Var::ind(&format!("z{i}"))).collect();
                let inside = Formula::and_all(zs.iter().map(|zi| Formula::in_set(zi, &zz))).expect("n >= 1");
                let coords =
                    Formula::and_all(zs.iter().zip(xs).map(|(zi, xi)| Formula::in_set(zi, xi))).expect("n >= 1");
                let tuples = Formula::forall_ind(zs, Formula::implies(inside, coords));
                each_set(Formula::iff(c(a), Formula::and(tuples, fewer(n + 1))))
            }
            PowStar(a, xs) => {
                let cover = each_z(Formula::implies(
                    Formula::in_set(&z, &zz),
                    Formula::or_all(xs.iter().map(m)).expect("at least one set"),
                ));
                let meets = xs.iter().map(|x| {
                    Formula::not(each_z(Formula::implies(Formula::in_set(&z, &zz), Formula::not(m(x)))))
                });
                let body = Formula::and_all(std::iter::once(cover).chain(meets)).expect("non-empty");
                each_set(Formula::iff(c(a), body))
            }
        }
    }
}

/// Subsets of `x` with at most `h` elements, with the size condition written
/// as `AND zi in Z -> !(AND_{i != j} !(zi = zj))` over `h + 1` variables.
/// Equivalent to the `PowAtMost` encoding, which uses `OR_{i<j} zi = zj`.
pub fn pow_at_most_double_negated(a: &Var, x: &Var, h: usize) -> Formula {
    let mut names = FreshNames::default();
    names.reserve(a);
    names.reserve(x);
    let pick = |names: &mut FreshNames, stem: &str, sort: Sort| {
        if names.is_used(stem) {
            names.fresh(stem, sort)
        } else {
            let v = Var::new(stem, sort);
            names.reserve(&v);
            v
        }
    };
    let z = pick(&mut names, "z", Sort::Individual);
    let zz = pick(&mut names, "Z", Sort::Set);
    let zs: Vec<Var> = (1..=h + 1).map(|i| pick(&mut names, &format!("z{i}"), Sort::Individual)).collect();
    let subset = Formula::forall_ind(vec![z.clone()], Formula::implies(Formula::in_set(&z, &zz), Formula::in_set(&z, x)));
    let members = Formula::and_all(zs.iter().map(|zi| Formula::in_set(zi, &zz))).expect("h + 1 >= 1");
    let mut distinct = Vec::new();
    for (i, zi) in zs.iter().enumerate() {
        for (j, zj) in zs.iter().enumerate() {
            if i != j {
                distinct.push(Formula::not(Formula::eq_ind(zi, zj)));
            }
        }
    }
    // With a single variable the inner conjunction is empty, i.e. true.
    let all_distinct = Formula::and_all(distinct).unwrap_or_else(|| Formula::eq_ind(&zs[0], &zs[0]));
    let size = Formula::forall_ind(zs, Formula::implies(members, Formula::not(all_distinct)));
    set_former(a, &zz, Formula::and(subset, size))
}

/// `(forall Z)(Z in coll <-> condition)` where `condition` mentions `z_set`.
pub fn set_former(coll: &Var, z_set: &Var, condition: Formula) -> Formula {
    Formula::forall_set(vec![z_set.clone()], Formula::iff(Formula::in_coll(z_set, coll), condition))
}
