//! Finite sets of domain elements, stored as bit vectors.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// A finite subset of `{0, 1, ...}`.
///
/// Trailing zero words are always trimmed, so structural equality and hashing
/// agree with set equality. The total order is the integer value of the
/// characteristic vector (`{0} < {1} < {0,1} < {2} < ...`).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ElemSet {
    words: SmallVec<[u64; 2]>,
}

impl ElemSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The set `{0, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        let mut s = Self::new();
        for e in 0..n {
            s.insert(e);
        }
        s
    }

    /// Builds a set from the low 64 bits of a characteristic mask.
    pub fn from_mask(mask: u64) -> Self {
        let mut s = Self::new();
        if mask != 0 {
            s.words.push(mask);
        }
        s
    }

    /// The characteristic mask, if every element is below 64.
    pub fn to_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn contains(&self, e: usize) -> bool {
        self.words
            .get(e / 64)
            .is_some_and(|w| w & (1u64 << (e % 64)) != 0)
    }

    pub fn insert(&mut self, e: usize) -> bool {
        let (w, b) = (e / 64, e % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, e: usize) -> bool {
        let (w, b) = (e / 64, e % 64);
        let present = self.contains(e);
        if present {
            self.words[w] &= !(1 << b);
            self.trim();
        }
        present
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn min_elem(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn max_elem(&self) -> Option<usize> {
        let (i, w) = self.words.iter().enumerate().last()?;
        Some(i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        let n = self.words.len().max(other.words.len());
        let mut words: SmallVec<[u64; 2]> = SmallVec::with_capacity(n);
        for i in 0..n {
            let a = self.words.get(i).copied().unwrap_or(0);
            let b = other.words.get(i).copied().unwrap_or(0);
            words.push(op(a, b));
        }
        let mut s = Self { words };
        s.trim();
        s
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    /// True when every element is below `n`.
    pub fn within(&self, n: usize) -> bool {
        self.max_elem().is_none_or(|m| m < n)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Ord for ElemSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for ElemSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromIterator<usize> for ElemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Self::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ElemSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ElemSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        Ok(v.into_iter().collect())
    }
}

/// All subsets of `{0, ..., n-1}` with fewer than `h` elements, in order of size.
pub fn subsets_below(n: usize, h: usize) -> Vec<ElemSet> {
    use itertools::Itertools;
    let mut out = Vec::new();
    for k in 0..h.min(n + 1) {
        for c in (0..n).combinations(k) {
            out.push(c.into_iter().collect());
        }
    }
    out
}
