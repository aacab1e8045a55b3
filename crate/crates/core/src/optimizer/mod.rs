//! The SASOC optimizers: multi-timescale simultaneous perturbation descent
//! on the staffing parameter with Lagrange-multiplier ascent on the SLA and
//! queue-feasibility constraints.

pub mod estimate;
pub mod lagrange;
mod sasoc;
pub mod schedule;
pub mod stage;

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{ContinuousParam, ServiceSystem, WorkerParam};
use crate::projection::{gamma_bar_clamp, gamma_project, ProjectionError, ProjectionParams, SpdParams};
use crate::rng::{stream, stream_rng};
use crate::sim::{CostWeights, Policy, SimOptions};

pub use lagrange::{lagrangian_sample, update_l_estimates, LagrangeState};
pub use sasoc::{
    sasoc_g_iteration, sasoc_h_iteration, sasoc_iteration, sasoc_w_iteration, spd_inverse, IterationConfig, OptimizerState,
    WoodburyDivisor,
};
pub use schedule::{ScheduleError, StepSizeSchedule};
pub use stage::{BoxError, SimulationModel, StageModel, StageSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Algorithm {
    /// SASOC-G: first-order SPSA.
    #[default]
    #[serde(rename = "sasoc-g", alias = "G", alias = "g", alias = "gradient")]
    Gradient,
    /// SASOC-H: SPSA Newton with an explicit Hessian estimate.
    #[serde(rename = "sasoc-h", alias = "H", alias = "h", alias = "newton")]
    Newton,
    /// SASOC-W: SPSA Newton with Woodbury inverse updates.
    #[serde(rename = "sasoc-w", alias = "W", alias = "w", alias = "woodbury")]
    Woodbury,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Gradient, Algorithm::Newton, Algorithm::Woodbury];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gradient => "sasoc-g",
            Algorithm::Newton => "sasoc-h",
            Algorithm::Woodbury => "sasoc-w",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm `{0}` (expected G, H or W)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "sasoc-g" | "gradient" => Ok(Algorithm::Gradient),
            "h" | "sasoc-h" | "newton" => Ok(Algorithm::Newton),
            "w" | "sasoc-w" | "woodbury" => Ok(Algorithm::Woodbury),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Optimizer and simulation settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub algorithm: Algorithm,
    /// Number of iterations.
    #[serde(rename = "R", alias = "iterations")]
    pub iterations: u64,
    /// Replications per parameter setting and iteration.
    #[serde(rename = "K", alias = "replications")]
    pub replications: usize,
    /// Perturbation size of the first-order variant.
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub zeta: f64,
    pub epsilon: f64,
    /// Initial Hessian scale.
    pub omega: f64,
    pub a0: f64,
    pub b0: f64,
    pub d0: f64,
    pub seed: u64,
    pub policy: Policy,
    pub horizon_days: u32,
    pub r: f64,
    pub s: f64,
    pub lambda_init: f64,
    pub lambda_cap: Option<f64>,
    /// Starting `θ̄`; defaults to `w_max / 2` in every cell.
    pub theta_init: Option<Vec<f64>>,
    pub woodbury_divisor: WoodburyDivisor,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Gradient,
            iterations: 1000,
            replications: 10,
            delta: 0.5,
            delta1: 0.5,
            delta2: 0.5,
            zeta: 0.1,
            epsilon: 0.01,
            omega: 1.0,
            a0: 1.0,
            b0: 1.0,
            d0: 1.0,
            seed: 0,
            policy: Policy::Edf,
            horizon_days: 30,
            r: 0.5,
            s: 0.5,
            lambda_init: 0.0,
            lambda_cap: None,
            theta_init: None,
            woodbury_divisor: WoodburyDivisor::Delta2,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HyperparamError {
    #[error("R must be at least 1")]
    NoIterations,
    #[error("K must be at least 1")]
    NoReplications,
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("cost weights must be nonnegative and sum to 1, got r = {r}, s = {s}")]
    CostWeights { r: f64, s: f64 },
    #[error("horizon_days must be at least 1")]
    ZeroHorizon,
    #[error("lambda_init must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("theta_init has {got} entries, the system has {expected} cells")]
    ThetaInitLength { expected: usize, got: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

impl Hyperparams {
    pub fn schedule(&self) -> StepSizeSchedule {
        StepSizeSchedule { a0: self.a0, b0: self.b0, d0: self.d0, ..StepSizeSchedule::default() }
    }

    pub fn cost_weights(&self) -> Result<CostWeights, HyperparamError> {
        CostWeights::new(self.r, self.s).ok_or(HyperparamError::CostWeights { r: self.r, s: self.s })
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions::with_horizon(self.horizon_days)
    }

    pub fn validate(&self) -> Result<(), HyperparamError> {
        if self.iterations == 0 {
            return Err(HyperparamError::NoIterations);
        }
        if self.replications == 0 {
            return Err(HyperparamError::NoReplications);
        }
        for (name, value) in [("delta", self.delta), ("delta1", self.delta1), ("delta2", self.delta2), ("omega", self.omega)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(HyperparamError::NonPositive { name, value });
            }
        }
        if let Some(cap) = self.lambda_cap {
            if !(cap > 0.0) {
                return Err(HyperparamError::NonPositive { name: "lambda_cap", value: cap });
            }
        }
        if !(self.lambda_init >= 0.0) {
            return Err(HyperparamError::NegativeLambda(self.lambda_init));
        }
        if self.horizon_days == 0 {
            return Err(HyperparamError::ZeroHorizon);
        }
        self.cost_weights()?;
        self.schedule().validate()?;
        ProjectionParams::new(self.zeta)?;
        SpdParams::new(self.epsilon)?;
        Ok(())
    }

    /// Simulations one run consumes: `2 K R`.
    pub fn simulations(&self) -> u64 {
        2 * self.replications as u64 * self.iterations
    }

    pub fn iteration_config(&self, execution: Execution) -> Result<IterationConfig, HyperparamError> {
        self.validate()?;
        Ok(IterationConfig {
            algorithm: self.algorithm,
            replications: self.replications,
            delta: self.delta,
            delta1: self.delta1,
            delta2: self.delta2,
            projection: ProjectionParams::new(self.zeta)?,
            spd: SpdParams::new(self.epsilon)?,
            schedule: self.schedule(),
            lambda_cap: self.lambda_cap,
            woodbury_divisor: self.woodbury_divisor,
            seed: self.seed,
            execution,
        })
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Hyperparams(#[from] HyperparamError),
    #[error("iteration {iteration}: evaluation failed: {source}")]
    Model { iteration: u64, source: BoxError },
    #[error("matrix projection failed: {0}")]
    Projection(#[from] ProjectionError),
    #[error("projected Hessian estimate is singular")]
    Singular,
    #[error("iteration {iteration}: trace output failed: {source}")]
    Trace { iteration: u64, source: io::Error },
    #[error("model error: {0}")]
    Setup(String),
}

/// Per-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: u64,
    /// Total headcount of the nominal evaluation point.
    pub w_sum: f64,
    /// Mean single-stage cost of the nominal replications.
    pub cost: f64,
    pub l_nominal: f64,
    pub l_perturbed: f64,
    /// Multipliers after this iteration's ascent step.
    pub lambda: LagrangeState,
    /// Mean SLA constraint values of the nominal replications.
    pub g_mean: Vec<f64>,
    pub h_mean: f64,
    /// `θ̄` at which this iteration was evaluated.
    pub theta_bar: Vec<f64>,
    /// Nominal evaluation point (`Γ(θ̄)` for lattice models).
    pub point: Vec<f64>,
    pub woodbury_skipped: bool,
}

/// Full record of one run. Wall-clock time is deliberately absent so that
/// reruns with equal seeds are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub dimension: usize,
    pub n_constraints: usize,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new(dimension: usize, n_constraints: usize) -> Self {
        Self { dimension, n_constraints, rows: Vec::new() }
    }

    pub fn header(dimension: usize, n_constraints: usize) -> Vec<String> {
        let mut h: Vec<String> = ["n", "w_sum", "cost", "l_bar", "l_bar_prime", "h_mean", "lambda_f"].map(String::from).to_vec();
        h.extend((0..n_constraints).map(|i| format!("lambda_{i}")));
        h.extend((0..n_constraints).map(|i| format!("g_{i}")));
        h.extend((0..dimension).map(|i| format!("theta_bar_{i}")));
        h.extend((0..dimension).map(|i| format!("theta_{i}")));
        h.push("woodbury_skipped".into());
        h
    }

    pub fn record(row: &TraceRow) -> Vec<String> {
        let mut r = vec![
            row.n.to_string(),
            row.w_sum.to_string(),
            row.cost.to_string(),
            row.l_nominal.to_string(),
            row.l_perturbed.to_string(),
            row.h_mean.to_string(),
            row.lambda.queue.to_string(),
        ];
        r.extend(row.lambda.sla.iter().map(f64::to_string));
        r.extend(row.g_mean.iter().map(f64::to_string));
        r.extend(row.theta_bar.iter().map(f64::to_string));
        r.extend(row.point.iter().map(f64::to_string));
        r.push(u8::from(row.woodbury_skipped).to_string());
        r
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(self.dimension, self.n_constraints))?;
        for row in &self.rows {
            w.write_record(Self::record(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Rows of the final `fraction` of the run (at least one row).
    pub fn final_window(&self, fraction: f64) -> &[TraceRow] {
        let len = self.rows.len();
        let take = ((len as f64 * fraction).ceil() as usize).clamp(1.min(len), len);
        &self.rows[len - take..]
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// `Γ(θ̄(R))` for lattice models, the clamped `θ̄(R)` otherwise.
    pub theta_star: Vec<f64>,
    pub theta_bar: ContinuousParam,
    pub state: OptimizerState,
    pub trace: RunTrace,
    /// Model evaluations performed.
    pub simulations: u64,
}

impl RunOutput {
    pub fn worker_param(&self) -> WorkerParam {
        WorkerParam(self.theta_star.iter().map(|&x| x.round().max(0.0) as u32).collect())
    }
}

/// Receives each trace row as soon as its iteration completes.
pub trait TraceSink {
    fn row(&mut self, row: &TraceRow) -> io::Result<()>;
}

impl TraceSink for () {
    fn row(&mut self, _: &TraceRow) -> io::Result<()> {
        Ok(())
    }
}

/// Starting state of a run.
pub fn initial_state<M: StageModel + ?Sized>(model: &M, hp: &Hyperparams) -> Result<OptimizerState, OptimizerError> {
    let dim = model.dimension();
    let theta = match &hp.theta_init {
        Some(t) if t.len() != dim => return Err(HyperparamError::ThetaInitLength { expected: dim, got: t.len() }.into()),
        Some(t) => gamma_bar_clamp(t, model.w_max()),
        None => ContinuousParam::filled(dim, model.w_max() as f64 / 2.0),
    };
    let spd = SpdParams::new(hp.epsilon).map_err(HyperparamError::from)?;
    OptimizerState::new(hp.algorithm, theta, model.n_constraints(), hp.lambda_init, hp.omega, &spd)
}

/// Runs `R` iterations of the configured variant.
pub fn run<M: StageModel + ?Sized>(model: &M, hp: &Hyperparams, execution: Execution) -> Result<RunOutput, OptimizerError> {
    run_with_sink(model, hp, execution, &mut ())
}

/// [`run`], streaming each trace row to `sink`. On failure every row of the
/// completed iterations has already been delivered.
pub fn run_with_sink<M: StageModel + ?Sized, S: TraceSink + ?Sized>(
    model: &M,
    hp: &Hyperparams,
    execution: Execution,
    sink: &mut S,
) -> Result<RunOutput, OptimizerError> {
    let cfg = hp.iteration_config(execution)?;
    let mut state = initial_state(model, hp)?;
    let mut trace = RunTrace::new(model.dimension(), model.n_constraints());
    let mut simulations = 0;
    for _ in 0..hp.iterations {
        let row = sasoc_iteration(model, &mut state, &cfg)?;
        simulations += 2 * hp.replications as u64;
        sink.row(&row).map_err(|source| OptimizerError::Trace { iteration: row.n, source })?;
        trace.rows.push(row);
    }
    let theta_star = if model.is_discrete() {
        let mut rng = stream_rng(hp.seed, &[stream::FINAL]);
        gamma_project(&state.theta, model.w_max(), &cfg.projection, &mut rng).0.into_iter().map(f64::from).collect()
    } else {
        state.theta.0.clone()
    };
    Ok(RunOutput { theta_star, theta_bar: state.theta.clone(), state, trace, simulations })
}

/// Builds the simulation model for `system` from the run's settings.
pub fn simulation_model<'a>(system: &'a ServiceSystem, hp: &Hyperparams) -> Result<SimulationModel<'a>, OptimizerError> {
    let cw = hp.cost_weights()?;
    SimulationModel::new(system, hp.policy, hp.sim_options(), cw).map_err(|e| OptimizerError::Setup(e.to_string()))
}

/// Runs the optimizer on a service system with the configured policy.
pub fn run_on_system(system: &ServiceSystem, hp: &Hyperparams, execution: Execution) -> Result<RunOutput, OptimizerError> {
    run(&simulation_model(system, hp)?, hp, execution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("W".parse::<Algorithm>().unwrap(), Algorithm::Woodbury);
        assert!("x".parse::<Algorithm>().is_err());
    }

    #[test]
    fn defaults_follow_the_reference_protocol() {
        let hp = Hyperparams::default();
        assert_eq!((hp.iterations, hp.replications), (1000, 10));
        assert_eq!((hp.delta, hp.delta1, hp.delta2), (0.5, 0.5, 0.5));
        assert_eq!((hp.zeta, hp.epsilon), (0.1, 0.01));
        assert_eq!(hp.simulations(), 20_000);
        hp.validate().unwrap();
    }

    #[test]
    fn hyperparams_parse_from_toml_with_documented_names() {
        let hp: Hyperparams = toml::from_str("algorithm = \"W\"\nR = 50\nK = 4\ndelta1 = 0.3\npolicy = \"prio-pull\"\n").unwrap();
        assert_eq!(hp.algorithm, Algorithm::Woodbury);
        assert_eq!((hp.iterations, hp.replications, hp.delta1), (50, 4, 0.3));
        assert_eq!(hp.policy, Policy::PrioPull);
        assert!(toml::from_str::<Hyperparams>("bogus = 1").is_err());
    }

    #[test]
    fn invalid_hyperparams_are_rejected() {
        let bad = |f: fn(&mut Hyperparams)| {
            let mut hp = Hyperparams::default();
            f(&mut hp);
            hp.validate().unwrap_err()
        };
        assert_eq!(bad(|h| h.iterations = 0), HyperparamError::NoIterations);
        assert_eq!(bad(|h| h.replications = 0), HyperparamError::NoReplications);
        assert!(matches!(bad(|h| h.delta1 = 0.0), HyperparamError::NonPositive { name: "delta1", .. }));
        assert!(matches!(bad(|h| h.r = 0.7), HyperparamError::CostWeights { .. }));
        assert!(matches!(bad(|h| h.zeta = 0.6), HyperparamError::Projection(_)));
        assert!(matches!(bad(|h| h.b0 = -1.0), HyperparamError::Schedule(_)));
    }

    #[test]
    fn final_window_takes_the_last_tenth() {
        let row = |n| TraceRow {
            n,
            w_sum: 0.0,
            cost: 0.0,
            l_nominal: 0.0,
            l_perturbed: 0.0,
            lambda: LagrangeState::new(0, 0.0),
            g_mean: vec![],
            h_mean: 0.0,
            theta_bar: vec![],
            point: vec![],
            woodbury_skipped: false,
        };
        let trace = RunTrace { dimension: 0, n_constraints: 0, rows: (1..=25).map(row).collect() };
        let w = trace.final_window(0.1);
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].n, 23);
    }
}
