mod common;

use rand::seq::SliceRandom;
use rand::Rng;
use reflow_shift::preprocess::{midranks, spearman};

#[test]
fn ties_free_lists_match_rank_difference_formula() {
    let mut rng = common::rng(21);
    for n in 3..60 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let got = spearman(&x, &y).unwrap();
        assert!((got - common::spearman_rank_difference(&x, &y)).abs() <= 1e-12);
    }
}

#[test]
fn tied_lists_match_brute_midranks() {
    let mut rng = common::rng(22);
    for _ in 0..50 {
        let n = rng.gen_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        assert_eq!(midranks(&x), common::brute_midranks(&x));
        if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
            assert_eq!(spearman(&x, &y).unwrap(), 0.0);
            continue;
        }
        assert!((spearman(&x, &y).unwrap() - common::brute_spearman(&x, &y)).abs() <= 1e-12);
    }
}

#[test]
fn self_and_reversed() {
    let mut rng = common::rng(23);
    let mut x: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
    x.shuffle(&mut rng);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((spearman(&x, &x).unwrap() - 1.0).abs() <= 1e-12);
    assert!((spearman(&x, &neg).unwrap() + 1.0).abs() <= 1e-12);
}

#[test]
fn invariant_under_monotone_maps() {
    let mut rng = common::rng(24);
    let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
    let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let cube: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
    let base = spearman(&x, &y).unwrap();
    assert!((spearman(&ex, &cube).unwrap() - base).abs() <= 1e-12);
}
