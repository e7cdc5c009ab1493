mod common;

use common::*;
use irs_core::bayes::{ArmPrior, BeliefVector};
use irs_core::index::gamma_beta;

#[test]
fn vzero_matches_allocation_enumeration() {
    let r = vzero_oracle_suite(200, 11);
    assert_eq!(r.cases, 200);
    assert!(r.passed(), "{:#?}", r.mismatches);
}

#[test]
fn vemax_matches_sequence_enumeration() {
    let r = vemax_oracle_suite(100, 12);
    assert_eq!(r.cases, 100);
    assert!(r.passed(), "{:#?}", r.mismatches);
}

#[test]
fn index_reformulation_matches_enumeration() {
    let r = index_oracle_suite(100, 13);
    assert_eq!(r.cases, 100);
    assert!(r.passed(), "{:#?}", r.mismatches);
}

#[test]
fn exact_two_arm_expected_max() {
    // Beta(1,1) pair: E[max] = 2/3
    assert!((beta2_expected_max_exact(1, 1, 1, 1) - 2.0 / 3.0).abs() < 1e-15);
    let b = BeliefVector::new(vec![
        ArmPrior::beta(2.0, 5.0).unwrap(),
        ArmPrior::beta(4.0, 1.0).unwrap(),
    ])
    .unwrap();
    let lib = irs_core::bayes::expected_max_mean(&b).unwrap();
    assert!((lib - beta2_expected_max_exact(2, 5, 4, 1)).abs() < 1e-12);
}

#[test]
fn gamma_beta_matches_quadrature() {
    for &(a, b) in &[(1.0, 1.0), (0.5, 0.5), (3.0, 7.0), (20.0, 2.5)] {
        for i in 0..=20 {
            let lambda = -0.1 + 1.2 * i as f64 / 20.0;
            let q = gamma_beta_quadrature(a, b, lambda);
            assert!((gamma_beta(a, b, lambda) - q).abs() < 1e-9, "{a} {b} {lambda}");
        }
    }
}
