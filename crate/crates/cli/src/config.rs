use std::fs;
use std::path::{Path, PathBuf};

use dcqe_core::causal::{Estimand, Method};
use dcqe_core::datamodel::{CollaborationScope, PartitionSpec};
use dcqe_core::experiments::{
    default_label, experiment_one_plan, Analysis, Arm, ArtificialDataConfig, EvaluationPlan, EXPERIMENT_TWO_BENCHMARK,
    EXPERIMENT_TWO_COVARIATES,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Run,
    Evaluate,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Run => "run",
            Command::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Psm,
    Ipw,
    Both,
}

impl EstimatorChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            EstimatorChoice::Psm => vec![Method::Psm],
            EstimatorChoice::Ipw => vec![Method::Ipw],
            EstimatorChoice::Both => vec![Method::Psm, Method::Ipw],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeChoice {
    Whole,
    Left,
    Right,
    Top,
    Bottom,
    /// The one party in `parties`.
    Single,
    /// Exactly the listed parties.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulateMode {
    /// The fixed ten-row synthetic table.
    Table,
    /// One arm described by `[scenario]`.
    Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Txt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub bootstrap: usize,
    pub seed: u64,
    pub estimator: EstimatorChoice,
    pub estimand: Estimand,
    pub analysis: Analysis,
    pub scope: ScopeChoice,
    /// `[row_block, col_block]` pairs for `single` and `custom` scopes.
    pub parties: Vec<[usize; 2]>,
    /// One per column block; defaults to the block width minus one.
    pub intermediate_dim: Option<Vec<usize>>,
    /// Defaults to the number of covariates the scope covers.
    pub collaborative_dim: Option<usize>,
    /// Defaults to the number of subjects.
    pub anchor_size: Option<usize>,
    pub resample: bool,
    pub benchmark: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            bootstrap: 1000,
            seed: 0,
            estimator: EstimatorChoice::Ipw,
            estimand: Estimand::Ate,
            analysis: Analysis::Dcqe,
            scope: ScopeChoice::Whole,
            parties: Vec::new(),
            intermediate_dim: None,
            collaborative_dim: None,
            anchor_size: None,
            resample: true,
            benchmark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub mode: SimulateMode,
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub noise_sd: f64,
    pub row_blocks: usize,
    pub col_blocks: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let base = ArtificialDataConfig::default();
        SimulateSection {
            mode: SimulateMode::Table,
            n: base.n,
            m: base.m,
            rho: base.rho,
            noise_sd: base.noise_sd,
            row_blocks: 2,
            col_blocks: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// `party_files[k][l]` holds the covariates of row block k, column block l.
    pub party_files: Vec<Vec<PathBuf>>,
    /// One treatment/outcome file per row block.
    pub label_files: Vec<PathBuf>,
    pub id_column: Option<String>,
    pub treatment_column: String,
    pub outcome_column: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            party_files: Vec::new(),
            label_files: Vec::new(),
            id_column: None,
            treatment_column: "treatment".into(),
            outcome_column: "outcome".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub data: Option<PathBuf>,
    /// Covariates in party order: the first four go to the left parties.
    pub columns: Vec<String>,
    pub treatment_column: String,
    pub outcome_column: String,
    pub id_column: Option<String>,
    /// Multiplies the outcome column (dollars to thousands by default).
    pub outcome_scale: f64,
    pub benchmark: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            data: None,
            columns: EXPERIMENT_TWO_COVARIATES.iter().map(|s| s.to_string()).collect(),
            treatment_column: "treat".into(),
            outcome_column: "re78".into(),
            id_column: None,
            outcome_scale: 0.001,
            benchmark: EXPERIMENT_TWO_BENCHMARK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Also write every bootstrap replicate to `bootstrap.csv`.
    pub bootstrap_sidecar: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("results"),
            formats: vec![Format::Csv, Format::Json, Format::Txt],
            bootstrap_sidecar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub simulate: SimulateSection,
    pub run: RunSection,
    pub evaluate: EvaluateSection,
    pub output: OutputSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reads, fills defaults and validates everything that does not need data.
pub fn parse_config(path: &Path, command: Command) -> CliResult<RunConfig> {
    let cfg = read_config(path)?;
    cfg.validate(command)?;
    Ok(cfg)
}

/// Reads and fills defaults without validating.
pub fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<RunConfig> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// The effective config; parses back to an equal value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self, command: Command) -> CliResult<()> {
        let s = &self.scenario;
        if s.bootstrap == 0 {
            return Err(CliError::config("scenario.bootstrap", "must be at least 1"));
        }
        if let Some(b) = s.benchmark {
            if !b.is_finite() {
                return Err(CliError::config("scenario.benchmark", "must be finite"));
            }
        }
        if s.anchor_size == Some(0) {
            return Err(CliError::config("scenario.anchor_size", "must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::config("output.formats", "at least one format is required"));
        }
        match command {
            Command::Simulate => self.validate_simulate(),
            Command::Run => self.validate_run(),
            Command::Evaluate => self.validate_evaluate(),
        }
    }

    pub fn artificial(&self) -> ArtificialDataConfig {
        let sim = &self.simulate;
        ArtificialDataConfig {
            n: sim.n,
            m: sim.m,
            rho: sim.rho,
            noise_sd: sim.noise_sd,
            seed: self.scenario.seed,
        }
    }

    pub fn simulate_partition(&self) -> CliResult<PartitionSpec> {
        let sim = &self.simulate;
        if sim.row_blocks == 0 || sim.row_blocks > sim.n {
            return Err(CliError::config("simulate.row_blocks", format!("must be in 1..={}", sim.n)));
        }
        if sim.col_blocks == 0 || sim.col_blocks > sim.m {
            return Err(CliError::config("simulate.col_blocks", format!("must be in 1..={}", sim.m)));
        }
        PartitionSpec::even(sim.n, sim.m, sim.row_blocks, sim.col_blocks)
            .map_err(|e| CliError::config("simulate", e))
    }

    fn validate_simulate(&self) -> CliResult<()> {
        let sim = &self.simulate;
        self.artificial().validate().map_err(|e| CliError::config("simulate", e))?;
        let spec = self.simulate_partition()?;
        match sim.mode {
            SimulateMode::Table => {
                if sim.row_blocks != 2 || sim.col_blocks != 2 {
                    return Err(CliError::config(
                        "simulate.mode",
                        "table mode needs row_blocks = 2 and col_blocks = 2",
                    ));
                }
                experiment_one_plan(sim.n, sim.m, self.scenario.bootstrap, self.scenario.seed)
                    .and_then(|p| p.check_layout())
                    .map_err(|e| CliError::config("simulate.m", e))
            }
            SimulateMode::Scenario => self.scenario_plan(&spec, self.scenario.benchmark).map(|_| ()),
        }
    }

    fn validate_run(&self) -> CliResult<()> {
        let run = &self.run;
        if run.party_files.is_empty() || run.party_files[0].is_empty() {
            return Err(CliError::config("run.party_files", "at least one party file is required"));
        }
        let d = run.party_files[0].len();
        for (k, row) in run.party_files.iter().enumerate() {
            if row.len() != d {
                return Err(CliError::config(
                    &format!("run.party_files[{k}]"),
                    format!("{} files, expected {d}", row.len()),
                ));
            }
            for (l, p) in row.iter().enumerate() {
                self.require_file(&format!("run.party_files[{k}][{l}]"), p)?;
            }
        }
        if run.label_files.len() != run.party_files.len() {
            return Err(CliError::config(
                "run.label_files",
                format!("{} files for {} row blocks", run.label_files.len(), run.party_files.len()),
            ));
        }
        for (k, p) in run.label_files.iter().enumerate() {
            self.require_file(&format!("run.label_files[{k}]"), p)?;
        }
        if run.treatment_column == run.outcome_column {
            return Err(CliError::config("run.outcome_column", "must differ from run.treatment_column"));
        }
        // Dimension relations need the block widths and are checked after ingestion.
        self.check_scope_shape(run.party_files.len(), d)
    }

    fn validate_evaluate(&self) -> CliResult<()> {
        let ev = &self.evaluate;
        if ev.columns.len() != EXPERIMENT_TWO_COVARIATES.len() {
            return Err(CliError::config(
                "evaluate.columns",
                format!("{} names given, {} required", ev.columns.len(), EXPERIMENT_TWO_COVARIATES.len()),
            ));
        }
        let mut seen = ev.columns.clone();
        seen.extend([ev.treatment_column.clone(), ev.outcome_column.clone()]);
        seen.extend(ev.id_column.clone());
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::config("evaluate.columns", format!("column {:?} named twice", w[0])));
        }
        if !ev.outcome_scale.is_finite() || ev.outcome_scale == 0.0 {
            return Err(CliError::config("evaluate.outcome_scale", "must be finite and nonzero"));
        }
        if !ev.benchmark.is_finite() {
            return Err(CliError::config("evaluate.benchmark", "must be finite"));
        }
        if let Some(p) = &ev.data {
            self.require_file("evaluate.data", p)?;
        }
        Ok(())
    }

    fn require_file(&self, key: &str, p: &Path) -> CliResult<()> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(CliError::config(key, format!("{} is not a readable file", full.display())))
        }
    }

    fn check_scope_shape(&self, c: usize, d: usize) -> CliResult<()> {
        let s = &self.scenario;
        for &[k, l] in &s.parties {
            if k >= c || l >= d {
                return Err(CliError::config(
                    "scenario.parties",
                    format!("party [{k}, {l}] outside the {c} x {d} grid"),
                ));
            }
        }
        match s.scope {
            ScopeChoice::Single if s.parties.len() != 1 => {
                Err(CliError::config("scenario.parties", "single scope takes exactly one party"))
            }
            ScopeChoice::Custom if s.parties.is_empty() => {
                Err(CliError::config("scenario.parties", "custom scope needs at least one party"))
            }
            ScopeChoice::Single | ScopeChoice::Custom => Ok(()),
            _ if !s.parties.is_empty() => Err(CliError::config(
                "scenario.parties",
                "only used with scope = \"single\" or \"custom\"",
            )),
            _ => Ok(()),
        }
    }

    pub fn scope(&self, spec: &PartitionSpec) -> CliResult<CollaborationScope> {
        self.check_scope_shape(spec.n_row_blocks(), spec.n_col_blocks())?;
        let s = &self.scenario;
        Ok(match s.scope {
            ScopeChoice::Whole => CollaborationScope::whole(spec),
            ScopeChoice::Left => CollaborationScope::left(spec),
            ScopeChoice::Right => CollaborationScope::right(spec),
            ScopeChoice::Top => CollaborationScope::top(spec),
            ScopeChoice::Bottom => CollaborationScope::bottom(spec),
            ScopeChoice::Single => CollaborationScope::single(s.parties[0][0], s.parties[0][1]),
            ScopeChoice::Custom => CollaborationScope::custom(s.parties.iter().map(|p| (p[0], p[1])))
                .map_err(|e| CliError::config("scenario.parties", e))?,
        })
    }

    /// The single-arm plan described by `[scenario]` on `spec`.
    pub fn scenario_plan(&self, spec: &PartitionSpec, benchmark: Option<f64>) -> CliResult<EvaluationPlan> {
        let s = &self.scenario;
        let scope = self.scope(spec)?;
        let label = default_label(&scope, s.analysis);
        let arm = match s.analysis {
            Analysis::Centralized => Arm::centralized(&label, scope),
            Analysis::Individual => {
                if !scope.is_single_party() {
                    return Err(CliError::config(
                        "scenario.scope",
                        "individual analysis needs a single-party scope",
                    ));
                }
                let &(k, l) = scope.parties().iter().next().expect("one party");
                Arm::individual(&label, k, l)
            }
            Analysis::Dcqe => {
                let (dims, cdim) = self.dcqe_dims(spec, &scope)?;
                Arm::dcqe(&label, scope, dims, cdim)
            }
        };
        let plan = EvaluationPlan {
            partition: spec.clone(),
            arms: vec![arm],
            methods: s.estimator.methods(),
            estimand: s.estimand,
            anchor_size: s.anchor_size,
            bootstrap: s.bootstrap,
            master_seed: s.seed,
            resample: s.resample,
            benchmark,
        };
        plan.check_layout().map_err(|e| CliError::config("scenario", e))?;
        Ok(plan)
    }

    fn dcqe_dims(&self, spec: &PartitionSpec, scope: &CollaborationScope) -> CliResult<(Vec<usize>, usize)> {
        let s = &self.scenario;
        let widths = spec.col_blocks();
        let dims = match &s.intermediate_dim {
            Some(d) => d.clone(),
            None => widths.iter().map(|w| w - 1).collect(),
        };
        if dims.len() != widths.len() {
            return Err(CliError::config(
                "scenario.intermediate_dim",
                format!("{} entries for {} column blocks", dims.len(), widths.len()),
            ));
        }
        for l in scope.col_indices() {
            if dims[l] == 0 || dims[l] >= widths[l] {
                return Err(CliError::config(
                    "scenario.intermediate_dim",
                    format!(
                        "entry {l} is {} but column block {l} has {} covariates; reduction must be strict",
                        dims[l], widths[l]
                    ),
                ));
            }
        }
        let r = s.anchor_size.unwrap_or(spec.n_subjects());
        let limit = (spec.n_row_blocks() * dims.iter().sum::<usize>()).min(r);
        let cdim = match s.collaborative_dim {
            Some(c) => c,
            None => scope.col_indices().iter().map(|&l| widths[l]).sum::<usize>().min(limit),
        };
        if cdim == 0 || cdim > limit {
            return Err(CliError::config(
                "scenario.collaborative_dim",
                format!("{cdim} outside 1..={limit}"),
            ));
        }
        Ok((dims, cdim))
    }
}
