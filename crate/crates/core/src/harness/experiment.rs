//! Experiment matrices: every (algorithm, policy, seed) combination of one
//! service system, with per-run trace files and a summary table.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{pooled_utilization, UtilizationSummary};
use crate::exec::{map_indexed, try_map_indexed, Execution};
use crate::model::{ConfigError, ServiceSystem, SystemConfig};
use crate::optimizer::{run_with_sink, simulation_model, Algorithm, Hyperparams, OptimizerError, RunOutput, RunTrace, TraceRow, TraceSink};
use crate::rng::{derive_seed, stream};
use crate::sim::{simulate_period, Policy, SimError};

/// Fraction of the final iterations whose mean constraint values decide the
/// feasibility verdict.
pub const VERDICT_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Service-system configuration, relative to the spec file.
    pub config: PathBuf,
    pub algorithms: Vec<Algorithm>,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    /// Output directory, relative to the spec file.
    pub output_dir: PathBuf,
    /// Overrides of the default hyperparameters. `algorithm`, `policy` and
    /// `seed` are taken from the matrix.
    #[serde(default)]
    pub hyperparams: Hyperparams,
    /// Runs executed concurrently.
    #[serde(default = "one")]
    pub workers: usize,
    /// Replications at the final staffing used for the utilization report.
    #[serde(default = "default_eval_reps")]
    pub evaluation_replications: usize,
}

fn one() -> usize {
    1
}

fn default_eval_reps() -> usize {
    10
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("invalid experiment spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("experiment spec lists no {0}")]
    EmptyList(&'static str),
    #[error("workers and evaluation_replications must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Loads a spec and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })?;
        let mut spec = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.config = base.join(&spec.config);
        spec.output_dir = base.join(&spec.output_dir);
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.algorithms.is_empty() {
            return Err(HarnessError::EmptyList("algorithms"));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::EmptyList("policies"));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::EmptyList("seeds"));
        }
        if self.workers == 0 || self.evaluation_replications == 0 {
            return Err(HarnessError::ZeroCount);
        }
        self.hyperparams.validate().map_err(OptimizerError::from)?;
        Ok(())
    }

    /// The run matrix in output order: algorithm, then policy, then seed.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    out.push(RunSpec { algorithm, policy, seed });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub policy: Policy,
    pub seed: u64,
}

impl RunSpec {
    pub fn id(&self) -> String {
        format!("{}_{}_seed{}", self.algorithm, self.policy, self.seed)
    }

    pub fn hyperparams(&self, base: &Hyperparams) -> Hyperparams {
        Hyperparams { algorithm: self.algorithm, policy: self.policy, seed: self.seed, ..base.clone() }
    }
}

/// Outcome of one run as reported in the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: RunSpec,
    pub result: Result<RunReport, String>,
    pub wall_clock_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub theta: Vec<u32>,
    pub w_sum: u64,
    pub feasible: bool,
    pub utilization: UtilizationSummary,
    pub simulations: u64,
    pub iterations: u64,
}

/// Feasibility verdict from the final window of a trace: every mean SLA
/// constraint value and the mean queue constraint are `≤ 0`.
pub fn trace_verdict(trace: &RunTrace) -> bool {
    let window = trace.final_window(VERDICT_WINDOW);
    if window.is_empty() {
        return false;
    }
    let len = window.len() as f64;
    let g_ok = (0..trace.n_constraints).all(|c| window.iter().map(|r| r.g_mean[c]).sum::<f64>() / len <= 0.0);
    let h_ok = window.iter().map(|r| r.h_mean).sum::<f64>() / len <= 0.0;
    g_ok && h_ok
}

/// Trace sink writing CSV rows as they arrive and flushing after each.
pub struct CsvTraceSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvTraceSink<W> {
    pub fn new(out: W, dimension: usize, n_constraints: usize) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(RunTrace::header(dimension, n_constraints))?;
        writer.flush()?;
        Ok(Self { writer })
    }
}

impl<W: Write> TraceSink for CsvTraceSink<W> {
    fn row(&mut self, row: &TraceRow) -> io::Result<()> {
        self.writer.write_record(RunTrace::record(row)).map_err(io::Error::other)?;
        self.writer.flush()
    }
}

/// Simulates `theta` on `reps` fresh seeds and pools utilization.
pub fn evaluate_utilization(
    system: &ServiceSystem,
    theta: &[u32],
    hp: &Hyperparams,
    reps: usize,
    execution: Execution,
) -> Result<UtilizationSummary, SimError> {
    let shares = system.workload_weights().map(|w| w.skill_shares()).unwrap_or_else(|_| vec![0.0; system.n_skills]);
    let opts = hp.sim_options();
    let outcomes = try_map_indexed(reps, execution, |m| {
        simulate_period(system, theta, hp.policy, &opts, derive_seed(hp.seed, &[stream::FINAL, m as u64]))
    })?;
    Ok(pooled_utilization(&outcomes, system.n_skills, &shares))
}

fn execute_run(system: &ServiceSystem, spec: &ExperimentSpec, run: RunSpec, trace_path: &Path) -> Result<RunReport, String> {
    let hp = run.hyperparams(&spec.hyperparams);
    let model = simulation_model(system, &hp).map_err(|e| e.to_string())?;
    let file = File::create(trace_path).map_err(|e| format!("cannot create {}: {e}", trace_path.display()))?;
    let mut sink = CsvTraceSink::new(BufWriter::new(file), system.dimension(), model.targets.entries.len()).map_err(|e| e.to_string())?;
    let out: RunOutput = run_with_sink(&model, &hp, Execution::Parallel, &mut sink).map_err(|e| e.to_string())?;
    let theta = out.worker_param().0;
    let utilization =
        evaluate_utilization(system, &theta, &hp, spec.evaluation_replications, Execution::Parallel).map_err(|e| e.to_string())?;
    Ok(RunReport {
        w_sum: theta.iter().map(|&t| t as u64).sum(),
        theta,
        feasible: trace_verdict(&out.trace),
        utilization,
        simulations: out.simulations,
        iterations: hp.iterations,
    })
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub runs: Vec<RunSummary>,
    pub trace_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    pub timing_file: PathBuf,
}

impl ExperimentReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.result.is_ok())
    }
}

fn run_matrix<F>(n: usize, workers: usize, f: F) -> Result<Vec<RunSummary>, HarnessError>
where
    F: Fn(usize) -> RunSummary + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| HarnessError::Pool(e.to_string()))?;
        return Ok(pool.install(|| map_indexed(n, Execution::Parallel, f)));
    }
    let _ = workers;
    Ok(map_indexed(n, Execution::Sequential, f))
}

/// Runs the whole matrix. Individual run failures are recorded in the
/// summary and do not stop the remaining runs.
///
/// Output layout:
/// * `traces/<algorithm>_<policy>_seed<seed>.csv`: one row per iteration.
/// * `summary.csv`: final staffing, verdict, utilization and simulation
///   count per run.
/// * `timing.csv`: wall-clock time per run, kept apart so that every other
///   file is a pure function of the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    spec.validate()?;
    let system = ServiceSystem::new(SystemConfig::load(&spec.config)?)?;
    let trace_dir = spec.output_dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|source| HarnessError::Write { path: trace_dir.clone(), source })?;

    let runs = spec.runs();
    let trace_files: Vec<PathBuf> = runs.iter().map(|r| trace_dir.join(format!("{}.csv", r.id()))).collect();
    let summaries = run_matrix(runs.len(), spec.workers, |i| {
        let start = Instant::now();
        let result = execute_run(&system, spec, runs[i], &trace_files[i]);
        RunSummary { run: runs[i], result, wall_clock_ms: start.elapsed().as_millis() }
    })?;

    let summary_file = spec.output_dir.join("summary.csv");
    write_summary(&summary_file, &summaries)?;
    let timing_file = spec.output_dir.join("timing.csv");
    write_timing(&timing_file, &summaries)?;
    Ok(ExperimentReport { runs: summaries, trace_files, summary_file, timing_file })
}

fn write_summary(path: &Path, runs: &[RunSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "run_id",
        "algorithm",
        "policy",
        "seed",
        "status",
        "theta",
        "w_sum",
        "feasible",
        "mean_utilization_pct",
        "unstaffed_skills",
        "simulations",
        "iterations",
    ])?;
    for r in runs {
        let mut rec = vec![r.run.id(), r.run.algorithm.to_string(), r.run.policy.to_string(), r.run.seed.to_string()];
        match &r.result {
            Ok(rep) => rec.extend([
                "ok".to_string(),
                rep.theta.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
                rep.w_sum.to_string(),
                rep.feasible.to_string(),
                format!("{:.4}", rep.utilization.percent),
                rep.utilization.unstaffed_skills.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                rep.simulations.to_string(),
                rep.iterations.to_string(),
            ]),
            Err(e) => {
                rec.push(format!("error: {e}"));
                rec.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

fn write_timing(path: &Path, runs: &[RunSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run_id", "wall_clock_ms"])?;
    for r in runs {
        w.write_record([r.run.id(), r.wall_clock_ms.to_string()])?;
    }
    w.flush().map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}
