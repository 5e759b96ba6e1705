//! The randomized suites must notice a broken restriction operation.

use syllog_core::elemset::ElemSet;
use syllog_core::relativizer::{relativize, RelativizeConfig, RelativizeError, Relativized};
use syllog_core::selftest::{run_selftest, run_selftest_with, SelftestConfig, Suite};
use syllog_core::Interpretation;

fn config() -> SelftestConfig {
    SelftestConfig { seed: 11, cases: 300, suites: vec![Suite::SmallModel] }
}

/// Forgets which set variables keep their collection memberships.
fn ignore_preserved(m: &Interpretation, d: &ElemSet, cfg: &RelativizeConfig) -> Result<Relativized, RelativizeError> {
    relativize(m, d, &RelativizeConfig { preserved_sets: Default::default(), ..cfg.clone() })
}

/// Drops the largest element of the subdomain.
fn shrink(m: &Interpretation, d: &ElemSet, cfg: &RelativizeConfig) -> Result<Relativized, RelativizeError> {
    let mut d = d.clone();
    if d.len() > 1 {
        d.remove(d.max_elem().unwrap());
    }
    let cfg = RelativizeConfig { default_elem: cfg.default_elem.filter(|e| d.contains(*e)), ..cfg.clone() };
    relativize(m, &d, &cfg)
}

#[test]
fn genuine_restriction_passes() {
    assert!(run_selftest(&config()).passed());
}

#[test]
fn ignoring_preserved_sets_is_caught() {
    let r = run_selftest_with(&config(), &ignore_preserved);
    let s = r.suite(Suite::SmallModel).unwrap();
    assert!(s.violations > 0);
    assert!(s.first_violation.is_some());
}

#[test]
fn shrinking_the_subdomain_is_caught() {
    let r = run_selftest_with(&config(), &shrink);
    assert!(!r.passed());
}
