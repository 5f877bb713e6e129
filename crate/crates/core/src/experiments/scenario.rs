//! Bootstrap evaluation of one or more analysis arms on a shared dataset.
//!
//! Every replicate resamples subjects with replacement inside each row block
//! (each institution resamples its own subjects), regenerates the anchor, and
//! reruns every arm. A centralized fit on the whole replicate serves as the
//! reference for the inconsistency-with-CA measure.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal::{
    estimate_ipw, estimate_propensity, estimate_psm, ipw_weights, match_pairs, Estimand, Method,
    PropensityScores, ScoreSource,
};
use crate::collaboration::{generate_anchor, run_protocol};
use crate::datamodel::{scope_dataset, CollaborationScope, Dataset, PartitionSpec, ScopeKind};
use crate::error::{Error, Result};
use crate::metrics::{
    gap, inconsistency, matched_balance, mean, sample_sd, smd, BalanceReport, BootstrapDistribution,
};

/// Redraws allowed per replicate before giving up on a degenerate resample.
pub const MAX_REDRAWS: usize = 100;

const RESAMPLE_TAG: u64 = 0x5EED_0000_0000_0001;
const ANCHOR_TAG: u64 = 0x5EED_0000_0000_0002;
/// Stream of the no-resample point run; replicates use streams `0..B`.
const POINT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Dcqe,
    Centralized,
    Individual,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Analysis::Dcqe => "dcqe",
            Analysis::Centralized => "centralized",
            Analysis::Individual => "individual",
        })
    }
}

/// One analysis evaluated inside a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub scope: CollaborationScope,
    pub analysis: Analysis,
    /// Reduced width per column block; used by `Dcqe` only.
    pub intermediate_dims: Vec<usize>,
    /// Used by `Dcqe` only.
    pub collaborative_dim: usize,
}

impl Arm {
    pub fn dcqe(label: &str, scope: CollaborationScope, intermediate_dims: Vec<usize>, collaborative_dim: usize) -> Self {
        Self {
            label: label.to_string(),
            scope,
            analysis: Analysis::Dcqe,
            intermediate_dims,
            collaborative_dim,
        }
    }

    pub fn centralized(label: &str, scope: CollaborationScope) -> Self {
        Self {
            label: label.to_string(),
            scope,
            analysis: Analysis::Centralized,
            intermediate_dims: Vec::new(),
            collaborative_dim: 0,
        }
    }

    pub fn individual(label: &str, k: usize, l: usize) -> Self {
        Self {
            label: label.to_string(),
            scope: CollaborationScope::single(k, l),
            analysis: Analysis::Individual,
            intermediate_dims: Vec::new(),
            collaborative_dim: 0,
        }
    }
}

/// Table label for a scope and analysis, e.g. `W-clb`, `IA`, `CA`.
pub fn default_label(scope: &CollaborationScope, analysis: Analysis) -> String {
    match analysis {
        Analysis::Individual => "IA".into(),
        Analysis::Centralized if scope.kind == ScopeKind::Whole => "CA".into(),
        _ => {
            let tag = match scope.kind {
                ScopeKind::Left => "L",
                ScopeKind::Right => "R",
                ScopeKind::Top => "T",
                ScopeKind::Bottom => "B",
                ScopeKind::Whole => "W",
                ScopeKind::Custom => "C",
            };
            match analysis {
                Analysis::Dcqe => format!("{tag}-clb"),
                _ => format!("{tag}-ca"),
            }
        }
    }
}

/// Several arms sharing a partition, bootstrap replicates and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPlan {
    pub partition: PartitionSpec,
    pub arms: Vec<Arm>,
    pub methods: Vec<Method>,
    pub estimand: Estimand,
    /// Anchor rows; the dataset size when absent.
    pub anchor_size: Option<usize>,
    pub bootstrap: usize,
    pub master_seed: u64,
    /// When false every replicate reruns the original data.
    pub resample: bool,
    pub benchmark: Option<f64>,
}

/// Settings of a single arm evaluated with a single estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub partition: PartitionSpec,
    pub scope: CollaborationScope,
    pub intermediate_dims: Vec<usize>,
    pub collaborative_dim: usize,
    pub anchor_size: Option<usize>,
    pub estimator: Method,
    pub estimand: Estimand,
    pub analysis: Analysis,
    pub bootstrap: usize,
    pub master_seed: u64,
    pub resample: bool,
    pub benchmark: Option<f64>,
}

impl ScenarioConfig {
    pub fn plan(&self) -> EvaluationPlan {
        EvaluationPlan {
            partition: self.partition.clone(),
            arms: vec![Arm {
                label: default_label(&self.scope, self.analysis),
                scope: self.scope.clone(),
                analysis: self.analysis,
                intermediate_dims: self.intermediate_dims.clone(),
                collaborative_dim: self.collaborative_dim,
            }],
            methods: vec![self.estimator],
            estimand: self.estimand,
            anchor_size: self.anchor_size,
            bootstrap: self.bootstrap,
            master_seed: self.master_seed,
            resample: self.resample,
            benchmark: self.benchmark,
        }
    }
}

/// Bootstrap mean and standard error, plus the value on the original data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub point: f64,
}

impl Summary {
    fn new(draws: &[f64], point: f64) -> Self {
        Self {
            mean: mean(draws),
            se: sample_sd(draws),
            point,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub collaboration: String,
    pub analysis: Analysis,
    pub method: Method,
    pub estimand: Estimand,
    pub point_estimate: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub bootstrap: BootstrapDistribution,
    pub benchmark: Option<f64>,
    pub gap: Option<f64>,
    pub inconsistency_with_true: Option<Summary>,
    pub inconsistency_with_ca: Summary,
    pub masmd: Summary,
    /// Balance on the original data.
    pub balance: BalanceReport,
    /// Collaborative width actually used (after rank capping) on the original data.
    pub collaborative_dim: Option<usize>,
}

impl ScenarioResult {
    /// Row label of the estimator column, e.g. `DC-QE(IPW)`.
    pub fn estimator_label(&self) -> String {
        match self.analysis {
            Analysis::Dcqe => format!("DC-QE({})", self.method),
            _ => self.method.to_string(),
        }
    }
}

/// Per-arm outcome of one run of the pipeline.
#[derive(Debug, Clone)]
struct ArmDraw {
    /// Indexed like `plan.methods`.
    estimates: Vec<f64>,
    masmd: Vec<f64>,
    balance: Vec<BalanceReport>,
    inconsistency_true: Option<f64>,
    inconsistency_ca: f64,
    collaborative_dim: Option<usize>,
}

impl EvaluationPlan {
    pub fn validate(&self, data: &Dataset, true_scores: Option<&PropensityScores>) -> Result<()> {
        self.partition.check_against(data)?;
        if let Some(t) = true_scores {
            if t.len() != data.n_subjects() {
                return Err(Error::Dimension(format!(
                    "{} true scores for {} subjects",
                    t.len(),
                    data.n_subjects()
                )));
            }
        }
        self.check_layout()
    }

    /// Checks that need only the partition, not the data.
    pub fn check_layout(&self) -> Result<()> {
        if self.bootstrap == 0 {
            return Err(Error::Config("bootstrap must be at least 1".into()));
        }
        if self.arms.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("plan needs at least one arm and one method".into()));
        }
        if self.anchor_size == Some(0) {
            return Err(Error::Config("anchor_size must be positive".into()));
        }
        let r = self.anchor_size.unwrap_or(self.partition.n_subjects());
        for arm in &self.arms {
            arm.scope.validate(&self.partition)?;
            match arm.analysis {
                Analysis::Individual if !arm.scope.is_single_party() => {
                    return Err(Error::Config(format!(
                        "arm {}: individual analysis needs a single-party scope",
                        arm.label
                    )));
                }
                Analysis::Dcqe => validate_dims(arm, &self.partition, r)?,
                _ => {}
            }
        }
        Ok(())
    }
}

fn validate_dims(arm: &Arm, spec: &PartitionSpec, r: usize) -> Result<()> {
    if arm.intermediate_dims.len() != spec.n_col_blocks() {
        return Err(Error::Config(format!(
            "arm {}: {} intermediate dimensions for {} column blocks",
            arm.label,
            arm.intermediate_dims.len(),
            spec.n_col_blocks()
        )));
    }
    let cols = arm.scope.col_indices();
    for &l in &cols {
        let (dim, width) = (arm.intermediate_dims[l], spec.col_blocks()[l]);
        if dim == 0 || dim >= width {
            return Err(Error::Config(format!(
                "arm {}: intermediate dimension {dim} for column block {l} of width {width}; \
                 reduction must be strict",
                arm.label
            )));
        }
    }
    // Narrower scopes are capped at run time; the bound is the width a whole
    // collaboration would reach.
    let limit = (spec.n_row_blocks() * arm.intermediate_dims.iter().sum::<usize>()).min(r);
    if arm.collaborative_dim == 0 || arm.collaborative_dim > limit {
        return Err(Error::Config(format!(
            "arm {}: collaborative dimension {} outside 1..={limit}",
            arm.label, arm.collaborative_dim
        )));
    }
    Ok(())
}

fn stream_rng(master_seed: u64, tag: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ tag);
    rng.set_stream(stream);
    rng
}

/// Indices of a within-row-block bootstrap resample of `data`.
///
/// Resamples in which some row block lacks a treated or a control subject
/// are redrawn.
pub fn resample_indices(
    data: &Dataset,
    spec: &PartitionSpec,
    master_seed: u64,
    replicate: u64,
) -> Result<Vec<usize>> {
    let mut rng = stream_rng(master_seed, RESAMPLE_TAG, replicate);
    let z = data.treatments();
    for _ in 0..MAX_REDRAWS {
        let mut idx = Vec::with_capacity(data.n_subjects());
        let mut ok = true;
        for k in 0..spec.n_row_blocks() {
            let range = spec.row_range(k);
            let start = idx.len();
            idx.extend((0..range.len()).map(|_| rng.random_range(range.clone())));
            let treated = idx[start..].iter().filter(|&&i| z[i]).count();
            ok &= treated > 0 && treated < range.len();
        }
        if ok {
            return Ok(idx);
        }
    }
    Err(Error::Resample(format!(
        "replicate {replicate}: no resample with both groups in every row block after {MAX_REDRAWS} draws"
    )))
}

fn anchor_seed(master_seed: u64, stream: u64) -> u64 {
    stream_rng(master_seed, ANCHOR_TAG, stream).random()
}

/// Runs every arm of `plan` on one (possibly resampled) dataset.
fn evaluate_draw(
    plan: &EvaluationPlan,
    data: &Dataset,
    true_scores: Option<&[f64]>,
    anchor_seed: u64,
) -> Result<Vec<ArmDraw>> {
    let ca = estimate_propensity(data.covariates(), data.treatments(), ScoreSource::Centralized)?;
    let anchor = if plan.arms.iter().any(|a| a.analysis == Analysis::Dcqe) {
        let r = plan.anchor_size.unwrap_or(data.n_subjects());
        Some(generate_anchor(&data.covariates().column_ranges(), r, anchor_seed)?)
    } else {
        None
    };

    plan.arms
        .iter()
        .map(|arm| {
            let subjects = arm.scope.subject_indices(&plan.partition)?;
            let (scores, collaborative_dim) = match arm.analysis {
                Analysis::Dcqe => {
                    let anchor = anchor.as_ref().expect("anchor generated for dcqe arms");
                    let (rep, integration) = run_protocol(
                        data,
                        &plan.partition,
                        &arm.scope,
                        anchor,
                        &arm.intermediate_dims,
                        arm.collaborative_dim,
                    )?;
                    let s = estimate_propensity(&rep.values, &rep.treatments, ScoreSource::Dcqe)?;
                    (s, Some(integration.effective_dim))
                }
                Analysis::Centralized | Analysis::Individual => {
                    let local = scope_dataset(data, &plan.partition, &arm.scope)?;
                    let source = if arm.analysis == Analysis::Individual {
                        ScoreSource::Individual
                    } else {
                        ScoreSource::Centralized
                    };
                    (estimate_propensity(local.covariates(), local.treatments(), source)?, None)
                }
            };
            let sub = data.select_rows(&subjects)?;
            let (z, y) = (sub.treatments(), sub.outcomes());

            let mut estimates = Vec::with_capacity(plan.methods.len());
            let mut balance = Vec::with_capacity(plan.methods.len());
            for &method in &plan.methods {
                match method {
                    Method::Psm => {
                        let m = match_pairs(&scores, z)?;
                        estimates.push(estimate_psm(&m, y, plan.estimand)?.value);
                        balance.push(matched_balance(sub.covariates(), &m, plan.estimand)?);
                    }
                    Method::Ipw => {
                        estimates.push(estimate_ipw(&scores, z, y, plan.estimand)?.value);
                        let w = ipw_weights(&scores.values, z, plan.estimand);
                        balance.push(smd(sub.covariates(), z, Some(&w))?);
                    }
                }
            }
            let inconsistency_true = true_scores
                .map(|t| {
                    let t: Vec<f64> = subjects.iter().map(|&i| t[i]).collect();
                    inconsistency(&scores.values, &t)
                })
                .transpose()?;
            let inconsistency_ca = inconsistency(&scores.values, &ca.select(&subjects).values)?;
            Ok(ArmDraw {
                estimates,
                masmd: balance.iter().map(|b| b.masmd).collect(),
                balance,
                inconsistency_true,
                inconsistency_ca,
                collaborative_dim,
            })
        })
        .collect()
}

/// Evaluates all arms and methods; results are ordered method-major, then by
/// arm, so each method forms a contiguous block as in the published tables.
pub fn run_plan(
    data: &Dataset,
    true_scores: Option<&PropensityScores>,
    plan: &EvaluationPlan,
) -> Result<Vec<ScenarioResult>> {
    plan.validate(data, true_scores)?;
    let truth = true_scores.map(|t| t.values.as_slice());
    let point_anchor = anchor_seed(plan.master_seed, POINT_STREAM);
    let point = evaluate_draw(plan, data, truth, point_anchor)?;

    let replicates: Vec<Vec<ArmDraw>> = (0..plan.bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            if !plan.resample {
                return evaluate_draw(plan, data, truth, point_anchor);
            }
            let idx = resample_indices(data, &plan.partition, plan.master_seed, b)?;
            let sample = data.select_rows(&idx)?;
            let sample_truth: Option<Vec<f64>> = truth.map(|t| idx.iter().map(|&i| t[i]).collect());
            evaluate_draw(plan, &sample, sample_truth.as_deref(), anchor_seed(plan.master_seed, b))
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(plan.methods.len() * plan.arms.len());
    for (mi, &method) in plan.methods.iter().enumerate() {
        for (ai, arm) in plan.arms.iter().enumerate() {
            let column = |f: &dyn Fn(&ArmDraw) -> f64| -> Vec<f64> {
                replicates.iter().map(|r| f(&r[ai])).collect()
            };
            let p = &point[ai];
            let bootstrap = BootstrapDistribution {
                estimates: column(&|d| d.estimates[mi]),
                estimand: plan.estimand,
                method,
            };
            let inconsistency_with_true = p.inconsistency_true.map(|pt| {
                Summary::new(&column(&|d| d.inconsistency_true.unwrap_or(f64::NAN)), pt)
            });
            results.push(ScenarioResult {
                collaboration: arm.label.clone(),
                analysis: arm.analysis,
                method,
                estimand: plan.estimand,
                point_estimate: p.estimates[mi],
                mean: bootstrap.mean(),
                standard_error: bootstrap.standard_error(),
                benchmark: plan.benchmark,
                gap: plan.benchmark.map(|bm| gap(&bootstrap, bm)),
                inconsistency_with_true,
                inconsistency_with_ca: Summary::new(&column(&|d| d.inconsistency_ca), p.inconsistency_ca),
                masmd: Summary::new(&column(&|d| d.masmd[mi]), p.masmd[mi]),
                balance: p.balance[mi].clone(),
                collaborative_dim: p.collaborative_dim,
                bootstrap,
            });
        }
    }
    Ok(results)
}

/// Single-arm, single-estimator evaluation.
pub fn run_scenario(
    data: &Dataset,
    true_scores: Option<&PropensityScores>,
    config: &ScenarioConfig,
) -> Result<ScenarioResult> {
    let mut results = run_plan(data, true_scores, &config.plan())?;
    Ok(results.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{generate_artificial, ArtificialDataConfig};

    fn small() -> (Dataset, PropensityScores, PartitionSpec) {
        let cfg = ArtificialDataConfig { n: 120, seed: 3, ..Default::default() };
        let (data, truth) = generate_artificial(&cfg).unwrap();
        let spec = PartitionSpec::even(120, 6, 2, 2).unwrap();
        (data, truth, spec)
    }

    fn config(spec: &PartitionSpec) -> ScenarioConfig {
        ScenarioConfig {
            partition: spec.clone(),
            scope: CollaborationScope::whole(spec),
            intermediate_dims: vec![2, 2],
            collaborative_dim: 6,
            anchor_size: None,
            estimator: Method::Psm,
            estimand: Estimand::Ate,
            analysis: Analysis::Dcqe,
            bootstrap: 1,
            master_seed: 11,
            resample: false,
            benchmark: Some(1.0),
        }
    }

    #[test]
    fn single_unresampled_replicate_equals_point_run() {
        let (data, truth, spec) = small();
        for estimator in [Method::Psm, Method::Ipw] {
            let cfg = ScenarioConfig { estimator, ..config(&spec) };
            let r = run_scenario(&data, Some(&truth), &cfg).unwrap();
            assert_eq!(r.mean, r.point_estimate);
            assert_eq!(r.standard_error, 0.0);
            assert_eq!(r.gap.unwrap(), (r.point_estimate - 1.0).abs());
            assert_eq!(r.masmd.mean, r.masmd.point);
        }
    }

    #[test]
    fn centralized_whole_scope_has_zero_ca_inconsistency() {
        let (data, truth, spec) = small();
        let cfg = ScenarioConfig {
            analysis: Analysis::Centralized,
            bootstrap: 4,
            resample: true,
            ..config(&spec)
        };
        let r = run_scenario(&data, Some(&truth), &cfg).unwrap();
        assert_eq!(r.collaboration, "CA");
        assert_eq!(r.inconsistency_with_ca, Summary { mean: 0.0, se: 0.0, point: 0.0 });
    }

    #[test]
    fn rejects_invalid_arms() {
        let (data, _, spec) = small();
        let strict = ScenarioConfig { intermediate_dims: vec![3, 2], ..config(&spec) };
        let err = run_scenario(&data, None, &strict).unwrap_err();
        assert!(err.to_string().contains("reduction must be strict"));
        let wide = ScenarioConfig { collaborative_dim: 9, ..config(&spec) };
        assert!(matches!(run_scenario(&data, None, &wide), Err(Error::Config(_))));
        let ia = ScenarioConfig { analysis: Analysis::Individual, ..config(&spec) };
        assert!(matches!(run_scenario(&data, None, &ia), Err(Error::Config(_))));
        let none = ScenarioConfig { bootstrap: 0, ..config(&spec) };
        assert!(run_scenario(&data, None, &none).is_err());
    }

    #[test]
    fn resamples_stay_inside_row_blocks() {
        let (data, _, spec) = small();
        let idx = resample_indices(&data, &spec, 5, 0).unwrap();
        assert_eq!(idx.len(), 120);
        assert!(idx[..60].iter().all(|&i| i < 60));
        assert!(idx[60..].iter().all(|&i| i >= 60));
        assert_eq!(idx, resample_indices(&data, &spec, 5, 0).unwrap());
        assert_ne!(idx, resample_indices(&data, &spec, 5, 1).unwrap());
    }

    #[test]
    fn labels() {
        let spec = PartitionSpec::even(8, 4, 2, 2).unwrap();
        assert_eq!(default_label(&CollaborationScope::left(&spec), Analysis::Dcqe), "L-clb");
        assert_eq!(default_label(&CollaborationScope::whole(&spec), Analysis::Centralized), "CA");
        assert_eq!(default_label(&CollaborationScope::single(0, 0), Analysis::Individual), "IA");
    }
}
