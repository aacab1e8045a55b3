//! The black-box interface the optimizers drive: one call yields the
//! single-stage cost and constraint values of one replication.

use std::error::Error as StdError;

use crate::model::{ServiceSystem, WorkloadError, WorkloadWeights};
use crate::sim::{constraint_values, simulate_period, single_stage_cost, CostWeights, Policy, SimOptions, SlaTargets};

pub type BoxError = Box<dyn StdError + Send + Sync + 'static>;

/// Observed single-stage quantities of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSample {
    /// `c ∈ [0, 1]`.
    pub cost: f64,
    /// SLA constraint values, positive when violated.
    pub g: Vec<f64>,
    /// Queue-feasibility constraint, `1 - q`.
    pub h: f64,
}

pub trait StageModel: Sync {
    fn dimension(&self) -> usize;
    fn w_max(&self) -> u32;
    /// Number of SLA constraints.
    fn n_constraints(&self) -> usize;
    /// Whether evaluation points must be projected onto the integer lattice.
    fn is_discrete(&self) -> bool;
    /// Evaluates one replication at `point`; identical `(point, seed)` pairs
    /// must give identical samples.
    fn sample(&self, point: &[f64], seed: u64) -> Result<StageSample, BoxError>;
}

/// [`StageModel`] backed by the discrete-event simulator.
#[derive(Debug, Clone)]
pub struct SimulationModel<'a> {
    pub system: &'a ServiceSystem,
    pub policy: Policy,
    pub options: SimOptions,
    pub weights: WorkloadWeights,
    pub targets: SlaTargets,
    pub cost_weights: CostWeights,
}

impl<'a> SimulationModel<'a> {
    pub fn new(system: &'a ServiceSystem, policy: Policy, options: SimOptions, cost_weights: CostWeights) -> Result<Self, WorkloadError> {
        Ok(Self {
            system,
            policy,
            options,
            weights: system.workload_weights()?,
            targets: SlaTargets::from_system(system),
            cost_weights,
        })
    }

    pub fn sample_lattice(&self, theta: &[u32], seed: u64) -> Result<StageSample, BoxError> {
        let out = simulate_period(self.system, theta, self.policy, &self.options, seed)?;
        let cost = single_stage_cost(&out.state, &self.weights, &self.targets, self.cost_weights);
        let cv = constraint_values(&out.state, &self.targets);
        Ok(StageSample { cost, g: cv.g, h: cv.h })
    }
}

impl StageModel for SimulationModel<'_> {
    fn dimension(&self) -> usize {
        self.system.dimension()
    }

    fn w_max(&self) -> u32 {
        self.system.w_max()
    }

    fn n_constraints(&self) -> usize {
        self.targets.entries.len()
    }

    fn is_discrete(&self) -> bool {
        true
    }

    fn sample(&self, point: &[f64], seed: u64) -> Result<StageSample, BoxError> {
        let theta: Vec<u32> = point.iter().map(|&x| x.round().clamp(0.0, self.w_max() as f64) as u32).collect();
        self.sample_lattice(&theta, seed)
    }
}
