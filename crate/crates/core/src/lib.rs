//! Satisfiability for a three-sorted quantified set-theoretic language with
//! individuals, sets of individuals and collections of sets.
//!
//! The pipeline is: parse ([`formulas`]), check the restriction on nested
//! quantifiers ([`restriction`]), normalize to conjunctions of literals
//! ([`normalizer`]), and search for a model no larger than a computable bound
//! ([`decider`]). [`relativizer`] builds the small models the bound relies on.
//! [`encodings`] and [`s5`] are applications.

pub mod decider;
pub mod elemset;
pub mod encodings;
pub mod formulas;
pub mod normalizer;
pub mod relativizer;
pub mod restriction;
pub mod s5;
pub mod selftest;
pub mod semantics;

pub use elemset::ElemSet;
pub use formulas::{parse, render, Formula, Sort, Var};
pub use semantics::{evaluate, Interpretation};
