use std::path::PathBuf;

use dcqe_core::datamodel::Dataset;
use dcqe_core::experiments::{
    experiment_two_plan, experiment_two_subset, generate_artificial, run_experiment_one, run_plan, ResultTable,
};

use crate::config::{read_config, Command, RunConfig, SimulateMode};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, ingest_parties, Schema};
use crate::report::Report;

/// One command-line call, after argument parsing.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

/// Reads the config, applies command-line overrides and validates.
pub fn load(inv: &Invocation) -> CliResult<RunConfig> {
    let mut cfg = read_config(&inv.config)?;
    if let Some(seed) = inv.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(data) = &inv.data {
        let abs = std::path::absolute(data).map_err(|e| CliError::Config(format!("--data: {e}")))?;
        cfg.evaluate.data = Some(abs);
    }
    cfg.validate(inv.command)?;
    Ok(cfg)
}

pub fn simulate(cfg: &RunConfig) -> CliResult<ResultTable> {
    let s = &cfg.scenario;
    let data_cfg = cfg.artificial();
    match cfg.simulate.mode {
        SimulateMode::Table => Ok(run_experiment_one(&data_cfg, s.bootstrap, s.seed)?),
        SimulateMode::Scenario => {
            let spec = cfg.simulate_partition()?;
            // The synthetic model has a unit effect.
            let plan = cfg.scenario_plan(&spec, Some(s.benchmark.unwrap_or(1.0)))?;
            let (data, truth) = generate_artificial(&data_cfg)?;
            let rows = run_plan(&data, Some(&truth), &plan)?;
            Ok(ResultTable::from_plan("Synthetic scenario", &plan, rows))
        }
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<ResultTable> {
    let (data, spec) = ingest_parties(cfg)?;
    let plan = cfg.scenario_plan(&spec, cfg.scenario.benchmark)?;
    let rows = run_plan(&data, None, &plan)?;
    Ok(ResultTable::from_plan("Party data", &plan, rows))
}

/// Reads the pooled employment-program file named by `evaluate`.
pub fn read_evaluation_data(cfg: &RunConfig) -> CliResult<Dataset> {
    let ev = &cfg.evaluate;
    let path = ev
        .data
        .as_ref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| CliError::config("evaluate.data", "no data file; set it or pass --data"))?;
    let schema = Schema {
        covariates: Some(ev.columns.clone()),
        treatment: Some(ev.treatment_column.clone()),
        outcome: Some(ev.outcome_column.clone()),
        id: ev.id_column.clone(),
    };
    let raw = ingest_csv(&path, &schema)?;
    let outcomes = raw.outcomes().iter().map(|y| y * ev.outcome_scale).collect();
    Dataset::new(raw.covariates().clone(), raw.treatments().to_vec(), outcomes)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<ResultTable> {
    let s = &cfg.scenario;
    let data = read_evaluation_data(cfg)?;
    let subset = experiment_two_subset(&data, s.seed)?;
    let mut plan = experiment_two_plan(s.bootstrap, s.seed)?;
    plan.benchmark = Some(cfg.evaluate.benchmark);
    let rows = run_plan(&subset, None, &plan)?;
    Ok(ResultTable::from_plan("Experiment II", &plan, rows))
}

/// Runs a validated config and builds its report.
pub fn report(command: Command, cfg: &RunConfig) -> CliResult<Report> {
    let table = match command {
        Command::Simulate => simulate(cfg)?,
        Command::Run => run(cfg)?,
        Command::Evaluate => evaluate(cfg)?,
    };
    let mut embedded = cfg.clone();
    embedded.base_dir = PathBuf::new();
    Ok(Report { command, seed: cfg.scenario.seed, config: embedded, table })
}

pub fn output_dir(inv: &Invocation, cfg: &RunConfig) -> PathBuf {
    match &inv.out {
        Some(p) => p.clone(),
        None => cfg.resolve(&cfg.output.dir),
    }
}

/// Everything `dcqe` does for one call; returns the report and the files written.
pub fn execute(inv: &Invocation) -> CliResult<(Report, Vec<PathBuf>)> {
    let cfg = load(inv)?;
    let report = report(inv.command, &cfg)?;
    let dir = output_dir(inv, &cfg);
    let files = report.write(&dir, &cfg.output.formats, cfg.output.bootstrap_sidecar)?;
    Ok((report, files))
}
