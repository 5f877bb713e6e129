//! The two published experiment designs as ready-made evaluation plans.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::artificial::{generate_artificial, ArtificialDataConfig};
use super::scenario::{run_plan, Arm, EvaluationPlan, ScenarioResult};
use crate::causal::{Estimand, Method};
use crate::datamodel::{CollaborationScope, Dataset, PartitionSpec};
use crate::error::{Error, Result};

/// Results of one experiment, method-major in row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub title: String,
    pub estimand: Estimand,
    pub benchmark: Option<f64>,
    pub bootstrap: usize,
    pub master_seed: u64,
    pub rows: Vec<ScenarioResult>,
}

impl ResultTable {
    pub fn row(&self, method: Method, collaboration: &str) -> Option<&ScenarioResult> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.collaboration == collaboration)
    }

    pub fn from_plan(title: &str, plan: &EvaluationPlan, rows: Vec<ScenarioResult>) -> Self {
        Self {
            title: title.to_string(),
            estimand: plan.estimand,
            benchmark: plan.benchmark,
            bootstrap: plan.bootstrap,
            master_seed: plan.master_seed,
            rows,
        }
    }
}

/// Two row blocks by two column blocks, reduced width 2; IA is party (0, 0).
pub fn experiment_one_plan(n: usize, m: usize, bootstrap: usize, master_seed: u64) -> Result<EvaluationPlan> {
    let spec = PartitionSpec::even(n, m, 2, 2)?;
    let dims = vec![2, 2];
    Ok(EvaluationPlan {
        arms: vec![
            Arm::individual("IA", 0, 0),
            Arm::dcqe("L-clb", CollaborationScope::left(&spec), dims.clone(), 3),
            Arm::dcqe("T-clb", CollaborationScope::top(&spec), dims.clone(), 6),
            Arm::dcqe("W-clb", CollaborationScope::whole(&spec), dims, 6),
            Arm::centralized("CA", CollaborationScope::whole(&spec)),
        ],
        partition: spec,
        methods: vec![Method::Psm, Method::Ipw],
        estimand: Estimand::Ate,
        anchor_size: None,
        bootstrap,
        master_seed,
        resample: true,
        benchmark: Some(1.0),
    })
}

/// Synthetic experiment: ten rows, {PSM, IPW} x {IA, L-clb, T-clb, W-clb, CA}.
///
/// The data seed in `data` is used as given; replicates derive from `master_seed`.
pub fn run_experiment_one(
    data: &ArtificialDataConfig,
    bootstrap: usize,
    master_seed: u64,
) -> Result<ResultTable> {
    let (dataset, truth) = generate_artificial(data)?;
    let plan = experiment_one_plan(data.n, data.m, bootstrap, master_seed)?;
    let rows = run_plan(&dataset, Some(&truth), &plan)?;
    Ok(ResultTable::from_plan("Experiment I", &plan, rows))
}

/// Covariate order expected by [`run_experiment_two`]: the left parties'
/// columns, then the right parties'.
pub const EXPERIMENT_TWO_COVARIATES: [&str; 8] = [
    "age", "married", "education", "nodegree", "hispanic", "black", "re74", "re75",
];
pub const EXPERIMENT_TWO_BLOCK: usize = 1337;
/// Benchmark ATT in thousands of dollars.
pub const EXPERIMENT_TWO_BENCHMARK: f64 = 1.794;

const SHUFFLE_TAG: u64 = 0x5EED_0000_0000_0003;

/// Shuffles subjects under `seed` and keeps the first `2 * 1337`.
pub fn experiment_two_subset(data: &Dataset, seed: u64) -> Result<Dataset> {
    let need = 2 * EXPERIMENT_TWO_BLOCK;
    if data.n_covariates() != EXPERIMENT_TWO_COVARIATES.len() {
        return Err(Error::Dimension(format!(
            "expected {} covariates, found {}",
            EXPERIMENT_TWO_COVARIATES.len(),
            data.n_covariates()
        )));
    }
    if data.n_subjects() < need {
        return Err(Error::InvalidData(format!(
            "{} subjects available, {need} required",
            data.n_subjects()
        )));
    }
    let mut order: Vec<usize> = (0..data.n_subjects()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SHUFFLE_TAG));
    order.truncate(need);
    data.select_rows(&order)
}

pub fn experiment_two_plan(bootstrap: usize, master_seed: u64) -> Result<EvaluationPlan> {
    let spec = PartitionSpec::new(vec![EXPERIMENT_TWO_BLOCK; 2], vec![4, 4])?;
    let dims = vec![3, 3];
    Ok(EvaluationPlan {
        arms: vec![
            Arm::individual("L-IA", 0, 0),
            Arm::individual("R-IA", 0, 1),
            Arm::dcqe("L-clb", CollaborationScope::left(&spec), dims.clone(), 4),
            Arm::dcqe("R-clb", CollaborationScope::right(&spec), dims.clone(), 4),
            Arm::dcqe("T-clb", CollaborationScope::top(&spec), dims.clone(), 8),
            Arm::dcqe("W-clb", CollaborationScope::whole(&spec), dims, 8),
            Arm::centralized("CA", CollaborationScope::whole(&spec)),
        ],
        partition: spec,
        methods: vec![Method::Psm, Method::Ipw],
        estimand: Estimand::Att,
        anchor_size: None,
        bootstrap,
        master_seed,
        resample: true,
        benchmark: Some(EXPERIMENT_TWO_BENCHMARK),
    })
}

/// Employment-program experiment: fourteen rows,
/// {PSM, IPW} x {L-IA, R-IA, L-clb, R-clb, T-clb, W-clb, CA}.
///
/// `data` holds the pooled treated and comparison subjects with covariates in
/// [`EXPERIMENT_TWO_COVARIATES`] order and outcomes in thousands of dollars.
pub fn run_experiment_two(data: &Dataset, bootstrap: usize, master_seed: u64) -> Result<ResultTable> {
    let subset = experiment_two_subset(data, master_seed)?;
    let plan = experiment_two_plan(bootstrap, master_seed)?;
    let rows = run_plan(&subset, None, &plan)?;
    Ok(ResultTable::from_plan("Experiment II", &plan, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_experiment_one_has_ten_rows() {
        let data = ArtificialDataConfig { n: 200, seed: 4, ..Default::default() };
        let t = run_experiment_one(&data, 3, 4).unwrap();
        assert_eq!(t.rows.len(), 10);
        let labels: Vec<_> = t.rows.iter().map(|r| (r.estimator_label(), r.collaboration.as_str())).collect();
        assert_eq!(labels[0], ("PSM".to_string(), "IA"));
        assert_eq!(labels[3], ("DC-QE(PSM)".to_string(), "W-clb"));
        assert_eq!(labels[8], ("DC-QE(IPW)".to_string(), "W-clb"));
        assert_eq!(t.row(Method::Psm, "T-clb").unwrap().collaborative_dim, Some(4));
        assert_eq!(t.row(Method::Psm, "W-clb").unwrap().collaborative_dim, Some(6));
        assert!(t.row(Method::Ipw, "CA").unwrap().inconsistency_with_ca.mean == 0.0);
    }
}
