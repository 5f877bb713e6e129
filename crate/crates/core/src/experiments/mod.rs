//! Synthetic data generation, bootstrap evaluation and the experiment tables.

mod artificial;
mod scenario;
mod tables;

pub use artificial::{generate_artificial, true_propensity, ArtificialDataConfig};
pub use scenario::{
    default_label, resample_indices, run_plan, run_scenario, Analysis, Arm, EvaluationPlan,
    ScenarioConfig, ScenarioResult, Summary, MAX_REDRAWS,
};
pub use tables::{
    experiment_one_plan, experiment_two_plan, experiment_two_subset, run_experiment_one,
    run_experiment_two, ResultTable, EXPERIMENT_TWO_BENCHMARK, EXPERIMENT_TWO_BLOCK,
    EXPERIMENT_TWO_COVARIATES,
};
