mod common;

use common::*;
use trajclass::distances::{discrete_frechet, dtw};

#[test]
fn frechet_small_examples_by_enumeration() {
    let a = traj("a", &[(0.0, 0.0), (1.0, 0.0)]);
    let b = traj("b", &[(0.0, 1.0), (1.0, 1.0)]);
    assert_eq!(brute_frechet(&a, &b), 1.0);
    assert_eq!(discrete_frechet(&a, &b), 1.0);
}

#[test]
fn dtw_small_examples_by_enumeration() {
    let a = traj("a", &[(0.0, 0.0), (1.0, 0.0)]);
    let b = traj("b", &[(0.0, 1.0)]);
    let expected = 1.0 + 2f64.sqrt();
    assert!((brute_dtw(&a, &b) - expected).abs() < 1e-12);
    assert!((dtw(&a, &b) - expected).abs() < 1e-12);
}
