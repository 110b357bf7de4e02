//! Experiment orchestration: plans, paired cells, resumable execution and
//! CSV output.

pub mod report;
pub mod runner;
pub mod seed;
pub mod stats;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineConfig, BaselineMethod, StrategyConfig};
use crate::environment::{generate_environment, Environment, EnvironmentConfig, ErgdParams};
use crate::error::{Error, Result};
use crate::ledger::{DecisionTrace, Ledger};
use crate::review::ReviewConfig;

pub use report::{
    build_report, fmt_sig6, read_results, write_results, write_significance, write_summary,
    ComparisonReport, ResultRow, SignificanceRow, SummaryRow,
};
pub use runner::{run_maddm, MaddmConfig, MaddmRun};
pub use seed::{cell_seed, method_seed};
pub use stats::{mann_whitney_u, summarize, MannWhitney, SampleSummary};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SIGNIFICANCE_FILE: &str = "significance.csv";
pub const LOCK_FILE: &str = "plan.lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Maddm,
    Fna,
    Bc,
    Rv,
    Bu,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Maddm => "maddm",
            MethodKind::Fna => "fna",
            MethodKind::Bc => "bc",
            MethodKind::Rv => "rv",
            MethodKind::Bu => "bu",
        }
    }
}

/// One method column of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
    pub exploration_first_rounds: usize,
    pub fna_k: usize,
    pub bc_budget_fraction: f64,
    pub rv_k: usize,
    pub strategy: StrategyConfig,
}

impl Default for MethodSpec {
    fn default() -> Self {
        Self {
            name: String::new(),
            kind: MethodKind::Maddm,
            exploration_first_rounds: 0,
            fna_k: 5,
            bc_budget_fraction: 0.10,
            rv_k: 3,
            strategy: StrategyConfig::default(),
        }
    }
}

impl MethodSpec {
    pub fn new(name: &str, kind: MethodKind, exploration_first_rounds: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            exploration_first_rounds,
            ..Self::default()
        }
    }

    fn baseline_config(&self) -> Option<BaselineConfig> {
        let method = match self.kind {
            MethodKind::Maddm => return None,
            MethodKind::Fna => BaselineMethod::Fna,
            MethodKind::Bc => BaselineMethod::Bc,
            MethodKind::Rv => BaselineMethod::Rv,
            MethodKind::Bu => BaselineMethod::Bu,
        };
        Some(BaselineConfig {
            method,
            fna_k: self.fna_k,
            bc_budget_fraction: self.bc_budget_fraction,
            rv_k: self.rv_k,
            exploration_first_rounds: self.exploration_first_rounds,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidConfig("method name must not be empty".into()));
        }
        self.strategy.validate()?;
        if let Some(b) = self.baseline_config() {
            b.validate()?;
        }
        Ok(())
    }

    /// Run this method over `env`.
    pub fn run(
        &self,
        env: &Environment,
        review: ReviewConfig,
        rng: &mut ChaCha8Rng,
        keep_trace: bool,
    ) -> Result<Ledger> {
        match self.baseline_config() {
            None => {
                let config = MaddmConfig {
                    review,
                    exploration_first_rounds: self.exploration_first_rounds,
                    ..MaddmConfig::default()
                };
                Ok(run_maddm(env, &config, rng, keep_trace)?.ledger)
            }
            Some(b) => run_baseline(&b, &self.strategy, env, rng, keep_trace),
        }
    }
}

/// Environment template; the accuracy mean comes from the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub name: String,
    pub value_mean: f64,
    pub value_std: f64,
    pub n_decisions: usize,
    pub n_advisors: usize,
    pub accuracy_std: f64,
    pub cost_mean_factor: f64,
    pub cost_std: f64,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self::env1()
    }
}

impl EnvironmentSpec {
    fn from_scale(name: &str, scale: f64) -> Self {
        let c = EnvironmentConfig::with_value_scale(scale, 0.75);
        Self {
            name: name.into(),
            value_mean: scale,
            value_std: scale,
            n_decisions: c.n_decisions,
            n_advisors: c.n_advisors,
            accuracy_std: c.accuracy_std,
            cost_mean_factor: c.cost_mean_factor,
            cost_std: c.cost_std,
        }
    }

    pub fn env1() -> Self {
        Self::from_scale("env1", 100.0)
    }

    pub fn env2() -> Self {
        Self::from_scale("env2", 500.0)
    }

    pub fn config(&self, accuracy_mean: f64) -> EnvironmentConfig {
        let values = ErgdParams {
            mean: self.value_mean,
            std: self.value_std,
            lower: 0.0,
            upper: None,
        };
        EnvironmentConfig {
            n_decisions: self.n_decisions,
            n_advisors: self.n_advisors,
            profit: values,
            loss: values,
            accuracy_mean,
            accuracy_std: self.accuracy_std,
            cost_mean_factor: self.cost_mean_factor,
            cost_std: self.cost_std,
        }
    }
}

/// Declarative description of a whole experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub base_seed: u64,
    pub repetitions: usize,
    /// Accuracy means swept by every environment.
    pub grid: Vec<f64>,
    pub environments: Vec<EnvironmentSpec>,
    pub methods: Vec<MethodSpec>,
    pub review: ReviewConfig,
}

impl Default for ExperimentPlan {
    /// Desk scale: ten grid points from 0.55 to 1.00, 20 repetitions.
    fn default() -> Self {
        Self {
            base_seed: 20_160_101,
            repetitions: 20,
            grid: (0..10).map(|k| round2(0.55 + 0.05 * k as f64)).collect(),
            environments: vec![EnvironmentSpec::env1(), EnvironmentSpec::env2()],
            methods: default_methods(),
            review: ReviewConfig::default(),
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::new("maddm", MethodKind::Maddm, 0),
        MethodSpec::new("maddm-ef", MethodKind::Maddm, 10),
        MethodSpec::new("fna", MethodKind::Fna, 0),
        MethodSpec::new("fna-ef", MethodKind::Fna, 10),
        MethodSpec::new("bc", MethodKind::Bc, 0),
        MethodSpec::new("bc-ef", MethodKind::Bc, 10),
        MethodSpec::new("rv", MethodKind::Rv, 0),
        MethodSpec::new("bu", MethodKind::Bu, 0),
    ]
}

/// Identity of one work unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub environment: usize,
    pub grid_index: usize,
    pub repetition: usize,
}

impl ExperimentPlan {
    /// The full sweep: 50 grid points from 0.51 to 1.00, 100 repetitions.
    pub fn full() -> Self {
        Self {
            repetitions: 100,
            grid: (0..50).map(|k| round2(0.51 + 0.01 * k as f64)).collect(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.grid.is_empty() || self.environments.is_empty() || self.methods.is_empty() {
            return bad("grid, environments and methods must be non-empty".into());
        }
        let mut seen = HashSet::new();
        for e in &self.environments {
            if e.name.trim().is_empty() || !seen.insert(e.name.as_str()) {
                return bad(format!(
                    "environment name {:?} is empty or repeated",
                    e.name
                ));
            }
            for &g in &self.grid {
                e.config(g).validate()?;
            }
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            m.validate()?;
            if !seen.insert(m.name.as_str()) {
                return bad(format!("method name {:?} is repeated", m.name));
            }
        }
        self.review.validate()
    }

    pub fn cells(&self) -> Vec<CellId> {
        let mut cells = Vec::new();
        for environment in 0..self.environments.len() {
            for grid_index in 0..self.grid.len() {
                for repetition in 0..self.repetitions {
                    cells.push(CellId {
                        environment,
                        grid_index,
                        repetition,
                    });
                }
            }
        }
        cells
    }

    fn describe(&self, cell: CellId) -> String {
        format!(
            "{}/grid {} ({})/rep {}",
            self.environments[cell.environment].name,
            cell.grid_index,
            self.grid[cell.grid_index],
            cell.repetition
        )
    }

    /// SHA-256 of the canonical JSON form, used to refuse resuming into an
    /// output directory written by a different plan.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("plan serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// The environment every method in `cell` runs against.
    pub fn environment(&self, cell: CellId) -> Result<Environment> {
        let config = self.environments[cell.environment].config(self.grid[cell.grid_index]);
        let seed = cell_seed(self.base_seed, cell.grid_index, cell.repetition);
        generate_environment(&config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn method_rng(&self, cell: CellId, method: &MethodSpec) -> ChaCha8Rng {
        let seed = cell_seed(self.base_seed, cell.grid_index, cell.repetition);
        ChaCha8Rng::seed_from_u64(method_seed(seed, &method.name))
    }

    fn find_environment(&self, name: &str) -> Result<usize> {
        self.environments
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no environment named {name:?}")))
    }

    fn find_method(&self, name: &str) -> Result<&MethodSpec> {
        self.methods
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no method named {name:?}")))
    }
}

/// Run every method of the plan on one cell. Rows follow the plan's method
/// order.
pub fn run_cell(plan: &ExperimentPlan, cell: CellId) -> Result<Vec<ResultRow>> {
    let wrap = |e: Error| Error::Cell {
        cell: plan.describe(cell),
        source: Box::new(e),
    };
    let env = plan.environment(cell).map_err(wrap)?;
    let digest = env.digest()[..16].to_string();
    let spec = &plan.environments[cell.environment];
    let mut rows = Vec::with_capacity(plan.methods.len());
    for method in &plan.methods {
        let mut rng = plan.method_rng(cell, method);
        let ledger = method
            .run(&env, plan.review, &mut rng, false)
            .map_err(wrap)?;
        let utility = ledger.utility();
        rows.push(ResultRow {
            environment: spec.name.clone(),
            grid_index: cell.grid_index,
            grid_point: plan.grid[cell.grid_index],
            repetition: cell.repetition,
            method: method.name.clone(),
            kind: method.kind.as_str().into(),
            exploration_first: method.exploration_first_rounds,
            utility,
            utility_per_decision: utility / ledger.n_decisions.max(1) as f64,
            correct_count: ledger.correct_count,
            n_decisions: ledger.n_decisions,
            total_cost: ledger.total_cost,
            mean_advisors: ledger.mean_advisors(),
            env_digest: digest.clone(),
        });
    }
    Ok(rows)
}

/// Per-decision rows of one method on one cell.
pub fn trace_cell(
    plan: &ExperimentPlan,
    environment: &str,
    grid_index: usize,
    repetition: usize,
    method: &str,
) -> Result<Vec<DecisionTrace>> {
    let cell = CellId {
        environment: plan.find_environment(environment)?,
        grid_index,
        repetition,
    };
    if grid_index >= plan.grid.len() || repetition >= plan.repetitions {
        return Err(Error::InvalidConfig(format!(
            "cell grid {grid_index} rep {repetition} lies outside the plan"
        )));
    }
    let spec = plan.find_method(method)?;
    let env = plan.environment(cell)?;
    let mut rng = plan.method_rng(cell, spec);
    let ledger = spec.run(&env, plan.review, &mut rng, true)?;
    Ok(ledger.trace.unwrap_or_default())
}

/// Everything `execute_plan` leaves on disk and in memory.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub rows: Vec<ResultRow>,
    pub report: ComparisonReport,
    /// Cells computed in this invocation; the rest were reused.
    pub cells_computed: usize,
}

/// Rows of `results.csv` up to the first unreadable record. A run killed
/// mid-write leaves a truncated tail, which is dropped.
fn load_partial(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    match r.headers() {
        Ok(h) if h.iter().eq(report::RESULTS_HEADER) => {}
        _ => return Ok(Vec::new()),
    }
    Ok(r.deserialize().map_while(|rec| rec.ok()).collect())
}

/// Run every missing cell of `plan`, then write `results.csv`,
/// `summary.csv` and `significance.csv` into `out_dir`.
///
/// Cells already complete in an existing `results.csv` are kept, so an
/// interrupted run can be resumed. The final files do not depend on how the
/// work was split across invocations.
pub fn execute_plan(plan: &ExperimentPlan, out_dir: &Path) -> Result<PlanOutcome> {
    plan.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let lock = out_dir.join(LOCK_FILE);
    let results = out_dir.join(RESULTS_FILE);
    let fingerprint = plan.fingerprint();

    let mut kept: Vec<ResultRow> = Vec::new();
    match fs::read_to_string(&lock) {
        Ok(old) if old.trim() == fingerprint && results.exists() => {
            kept = load_partial(&results)?;
        }
        Ok(old) if old.trim() != fingerprint => {
            return Err(Error::InvalidConfig(format!(
                "{} was written by a different plan; use a fresh output directory",
                out_dir.display()
            )));
        }
        _ => {}
    }
    fs::write(&lock, format!("{fingerprint}\n")).map_err(|e| Error::io(&lock, e))?;

    let env_rank: HashMap<&str, usize> = plan
        .environments
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.as_str(), i))
        .collect();
    let method_rank: HashMap<&str, usize> = plan
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name.as_str(), i))
        .collect();

    // A cell is reusable only if every method's row is present.
    let mut by_cell: BTreeMap<CellId, Vec<ResultRow>> = BTreeMap::new();
    for row in kept {
        let (Some(&environment), true) = (
            env_rank.get(row.environment.as_str()),
            method_rank.contains_key(row.method.as_str()),
        ) else {
            continue;
        };
        if row.grid_index >= plan.grid.len() || row.repetition >= plan.repetitions {
            continue;
        }
        let cell = CellId {
            environment,
            grid_index: row.grid_index,
            repetition: row.repetition,
        };
        by_cell.entry(cell).or_default().push(row);
    }
    by_cell.retain(|_, rows| {
        let names: HashSet<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        names.len() == plan.methods.len() && rows.len() == plan.methods.len()
    });

    let missing: Vec<CellId> = plan
        .cells()
        .into_iter()
        .filter(|c| !by_cell.contains_key(c))
        .collect();

    // Rewrite the file with only the reusable rows, then append as cells finish.
    let mut reused: Vec<ResultRow> = by_cell.into_values().flatten().collect();
    {
        let file = File::create(&results).map_err(|e| Error::io(&results, e))?;
        write_results(file, &reused, true)?;
    }
    let appender = Mutex::new(
        OpenOptions::new()
            .append(true)
            .open(&results)
            .map_err(|e| Error::io(&results, e))?,
    );
    let fresh: Vec<Vec<ResultRow>> = missing
        .par_iter()
        .map(|&cell| {
            let rows = run_cell(plan, cell)?;
            let mut file = appender.lock().expect("results appender poisoned");
            write_results(&mut *file, &rows, false).map_err(|e| Error::Cell {
                cell: plan.describe(cell),
                source: Box::new(e),
            })?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    drop(appender);

    reused.extend(fresh.into_iter().flatten());
    reused.sort_by_key(|r| {
        (
            env_rank[r.environment.as_str()],
            r.grid_index,
            r.repetition,
            method_rank[r.method.as_str()],
        )
    });
    let mut buf = Vec::new();
    write_results(&mut buf, &reused, true)?;
    write_atomic(&results, &buf)?;

    // Report from the rounded values on disk, so a resumed run and a fresh
    // run aggregate identical numbers.
    let rows = read_results(buf.as_slice())?;
    let report = build_report(&rows)?;
    write_report_files(&report, out_dir)?;
    Ok(PlanOutcome {
        rows,
        report,
        cells_computed: missing.len(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("csv.tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Write `summary.csv` and `significance.csv` for `report` into `out_dir`.
pub fn write_report_files(report: &ComparisonReport, out_dir: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_summary(&mut buf, &report.summary)?;
    write_atomic(&out_dir.join(SUMMARY_FILE), &buf)?;
    buf.clear();
    write_significance(&mut buf, &report.significance)?;
    write_atomic(&out_dir.join(SIGNIFICANCE_FILE), &buf)
}
