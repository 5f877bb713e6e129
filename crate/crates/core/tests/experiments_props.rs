use dcqe_core::causal::{Estimand, Method};
use dcqe_core::datamodel::{CollaborationScope, PartitionSpec};
use dcqe_core::experiments::{
    experiment_one_plan, generate_artificial, run_plan, run_scenario, Analysis, ArtificialDataConfig,
    ScenarioConfig,
};

#[test]
fn large_sample_moments() {
    let cfg = ArtificialDataConfig { n: 100_000, seed: 17, ..Default::default() };
    let (data, truth) = generate_artificial(&cfg).unwrap();
    let x = data.covariates();
    let n = x.rows() as f64;
    let means: Vec<f64> = (0..6).map(|j| x.column(j).iter().sum::<f64>() / n).collect();
    for a in 0..6 {
        for b in 0..6 {
            let cov = (0..x.rows()).map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b])).sum::<f64>() / (n - 1.0);
            let want = if a == b { 1.0 } else { 0.5 };
            assert!((cov - want).abs() < 0.02, "S[{a},{b}] = {cov}");
        }
    }
    let frac = data.n_treated() as f64 / n;
    assert!((frac - 0.5).abs() < 0.01, "treated fraction {frac}");
    assert_eq!(truth.len(), 100_000);
}

#[test]
fn naive_difference_is_strongly_biased() {
    for seed in 0..5 {
        let (data, _) = generate_artificial(&ArtificialDataConfig { seed, ..Default::default() }).unwrap();
        let (z, y) = (data.treatments(), data.outcomes());
        let mean = |g: bool| {
            let v: Vec<f64> = (0..y.len()).filter(|&i| z[i] == g).map(|i| y[i]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let diff = mean(true) - mean(false);
        assert!((diff - 4.15).abs() < 0.5, "seed {seed}: {diff}");
    }
}

fn ca_config(n: usize, seed: u64) -> (ScenarioConfig, ArtificialDataConfig) {
    let spec = PartitionSpec::even(n, 6, 2, 2).unwrap();
    let cfg = ScenarioConfig {
        scope: CollaborationScope::whole(&spec),
        partition: spec,
        intermediate_dims: vec![2, 2],
        collaborative_dim: 6,
        anchor_size: None,
        estimator: Method::Ipw,
        estimand: Estimand::Ate,
        analysis: Analysis::Centralized,
        bootstrap: 200,
        master_seed: seed,
        resample: true,
        benchmark: Some(1.0),
    };
    (cfg, ArtificialDataConfig { n, seed, ..Default::default() })
}

#[test]
fn centralized_standard_error_shrinks_with_root_n() {
    let se = |n: usize| {
        let (cfg, data_cfg) = ca_config(n, 23);
        let (data, truth) = generate_artificial(&data_cfg).unwrap();
        run_scenario(&data, Some(&truth), &cfg).unwrap().standard_error
    };
    let ratio = se(500) / se(2000);
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn plans_are_bit_reproducible() {
    let data_cfg = ArtificialDataConfig { n: 300, seed: 9, ..Default::default() };
    let (data, truth) = generate_artificial(&data_cfg).unwrap();
    let plan = experiment_one_plan(300, 6, 8, 9).unwrap();
    let a = run_plan(&data, Some(&truth), &plan).unwrap();
    let b = run_plan(&data, Some(&truth), &plan).unwrap();
    assert_eq!(a, b);
    let other = experiment_one_plan(300, 6, 8, 10).unwrap();
    assert_ne!(a, run_plan(&data, Some(&truth), &other).unwrap());
}

#[test]
fn inconsistencies_do_not_depend_on_the_estimator() {
    let data_cfg = ArtificialDataConfig { n: 300, seed: 12, ..Default::default() };
    let (data, truth) = generate_artificial(&data_cfg).unwrap();
    let plan = experiment_one_plan(300, 6, 5, 12).unwrap();
    let rows = run_plan(&data, Some(&truth), &plan).unwrap();
    let (psm, ipw) = rows.split_at(5);
    for (p, i) in psm.iter().zip(ipw) {
        assert_eq!(p.collaboration, i.collaboration);
        assert_eq!(p.inconsistency_with_true, i.inconsistency_with_true);
        assert_eq!(p.inconsistency_with_ca, i.inconsistency_with_ca);
    }
    let ca = rows.iter().find(|r| r.collaboration == "CA").unwrap();
    assert_eq!(ca.inconsistency_with_ca.mean, 0.0);
    assert_eq!(ca.inconsistency_with_ca.se, 0.0);
}

#[test]
fn standard_error_is_sample_sd_of_replicates() {
    let (cfg, data_cfg) = ca_config(200, 4);
    let cfg = ScenarioConfig { bootstrap: 20, ..cfg };
    let (data, truth) = generate_artificial(&data_cfg).unwrap();
    let r = run_scenario(&data, Some(&truth), &cfg).unwrap();
    let est = &r.bootstrap.estimates;
    let mean = est.iter().sum::<f64>() / 20.0;
    let sd = (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
    assert!((r.mean - mean).abs() < 1e-12);
    assert!((r.standard_error - sd).abs() < 1e-12);
    let gap = (est.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / 20.0).sqrt();
    assert!((r.gap.unwrap() - gap).abs() < 1e-12);
}
