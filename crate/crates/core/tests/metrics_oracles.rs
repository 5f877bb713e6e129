mod common;

use common::*;
use dcqe_core::causal::{ipw_weights, match_pairs, Estimand, Method, PropensityScores, ScoreSource};
use dcqe_core::metrics::{gap, inconsistency, matched_balance, smd, BootstrapDistribution};
use dcqe_core::Matrix;
use proptest::prelude::*;
use rand::Rng;

fn labelled(seed: u64, n: usize, m: usize) -> (Dense, Vec<bool>) {
    let mut r = rng(seed);
    let x = random_dense(&mut r, n, m);
    let mut z: Vec<bool> = (0..n).map(|_| r.random()).collect();
    z[0] = true;
    z[1] = true;
    z[2] = false;
    z[3] = false;
    (x, z)
}

fn column(x: &Dense, j: usize) -> Vec<f64> {
    x.iter().map(|r| r[j]).collect()
}

#[test]
fn seeded_hundred_subject_smd_matches_hand_formula() {
    let (x, z) = labelled(100, 100, 4);
    let report = smd(&Matrix::from_rows(&x).unwrap(), &z, None).unwrap();
    for j in 0..4 {
        assert!((report.smd_per_covariate[j] - smd_formula(&column(&x, j), &z, None)).abs() < 1e-12);
    }
    let max = report.smd_per_covariate.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    assert_eq!(report.masmd, max);

    let mut r = rng(101);
    let e: Vec<f64> = (0..100).map(|_| r.random_range(0.1..0.9)).collect();
    let w = ipw_weights(&e, &z, Estimand::Ate);
    let weighted = smd(&Matrix::from_rows(&x).unwrap(), &z, Some(&w)).unwrap();
    for j in 0..4 {
        assert!((weighted.smd_per_covariate[j] - smd_formula(&column(&x, j), &z, Some(&w))).abs() < 1e-12);
    }
}

#[test]
fn matched_balance_uses_each_occurrence() {
    let (x, z) = labelled(7, 60, 3);
    let mut r = rng(8);
    let e: Vec<f64> = (0..60).map(|_| r.random_range(0.05..0.95)).collect();
    let m = match_pairs(&PropensityScores::new(e, ScoreSource::True).unwrap(), &z).unwrap();
    let cov = Matrix::from_rows(&x).unwrap();

    // ATT sample: each treated subject and its match.
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for i in (0..60).filter(|&i| z[i]) {
        rows.extend([x[i].clone(), x[m.pairs[i]].clone()]);
        groups.extend([true, false]);
    }
    let att = matched_balance(&cov, &m, Estimand::Att).unwrap();
    for j in 0..3 {
        assert!((att.smd_per_covariate[j] - smd_formula(&column(&rows, j), &groups, None)).abs() < 1e-12);
    }

    // ATE sample adds each control and its treated match.
    for i in (0..60).filter(|&i| !z[i]) {
        rows.extend([x[i].clone(), x[m.pairs[i]].clone()]);
        groups.extend([false, true]);
    }
    let ate = matched_balance(&cov, &m, Estimand::Ate).unwrap();
    for j in 0..3 {
        assert!((ate.smd_per_covariate[j] - smd_formula(&column(&rows, j), &groups, None)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gap_dominates_bias(est in prop::collection::vec(-5.0f64..5.0, 1..50), bm in -5.0f64..5.0) {
        let dist = BootstrapDistribution { estimates: est, estimand: Estimand::Ate, method: Method::Ipw };
        prop_assert!(gap(&dist, bm) >= (dist.mean() - bm).abs() - 1e-12);
    }

    #[test]
    fn inconsistency_is_a_metric(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let mut draw = || (0..n).map(|_| r.random::<f64>()).collect::<Vec<f64>>();
        let (a, b, c) = (draw(), draw(), draw());
        let ab = inconsistency(&a, &b).unwrap();
        prop_assert_eq!(ab, inconsistency(&b, &a).unwrap());
        prop_assert_eq!(inconsistency(&a, &a).unwrap(), 0.0);
        prop_assert!(a == b || ab > 0.0);
        let ac = inconsistency(&a, &c).unwrap();
        let cb = inconsistency(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn smd_is_affine_invariant(seed in any::<u64>(), n in 6usize..60, a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -10.0f64..10.0) {
        let (x, z) = labelled(seed, n, 2);
        let y: Dense = x.iter().map(|r| vec![a * r[0] + b, r[1]]).collect();
        let before = smd(&Matrix::from_rows(&x).unwrap(), &z, None).unwrap();
        let after = smd(&Matrix::from_rows(&y).unwrap(), &z, None).unwrap();
        prop_assert!((after.smd_per_covariate[0] - a.signum() * before.smd_per_covariate[0]).abs() < 1e-10);
        prop_assert!((after.masmd - before.masmd).abs() < 1e-10);
    }

    #[test]
    fn equal_weights_match_unweighted(seed in any::<u64>(), n in 6usize..60, w in 0.1f64..10.0) {
        let (x, z) = labelled(seed, n, 3);
        let cov = Matrix::from_rows(&x).unwrap();
        let plain = smd(&cov, &z, None).unwrap();
        let weighted = smd(&cov, &z, Some(&vec![w; n])).unwrap();
        for (p, q) in plain.smd_per_covariate.iter().zip(&weighted.smd_per_covariate) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }
}
