//! Observed system state and the single-stage cost and constraint functions.

use serde::Serialize;

use crate::model::{ServiceSystem, WorkloadWeights};

/// State read at the end of a simulated period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemState {
    /// Waiting SRs per complexity queue.
    pub queue_lengths: Vec<u32>,
    /// Busy time over staffed time per (shift, skill) cell.
    pub utilizations: Vec<f64>,
    /// Fraction of closed SLA-bound SRs that met their deadline, per
    /// (customer, priority), indexed `customer * n_priorities + priority`.
    pub sla_attainment: Vec<f64>,
    /// Queue-feasibility indicator q.
    pub feasible: bool,
}

/// Weights `r` (under-utilization) and `s` (SLA gap) of the single-stage cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CostWeights {
    pub r: f64,
    pub s: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { r: 0.5, s: 0.5 }
    }
}

impl CostWeights {
    pub fn new(r: f64, s: f64) -> Option<Self> {
        (r >= 0.0 && s >= 0.0 && ((r + s) - 1.0).abs() <= 1e-9).then_some(Self { r, s })
    }
}

/// Contractual SLA fractions, indexed like [`SystemState::sla_attainment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlaTargets {
    /// `|C| * |P|`, the normalizer of the SLA-gap term.
    pub n_pairs: usize,
    /// `(pair index, target)` for every constrained pair, canonical order.
    pub entries: Vec<(usize, f64)>,
}

impl SlaTargets {
    pub fn from_system(system: &ServiceSystem) -> Self {
        let entries = system
            .constraint_pairs()
            .iter()
            .map(|&(c, p)| (c * system.n_priorities + p, system.sla(c, p).unwrap().target))
            .collect();
        Self { n_pairs: system.n_customers * system.n_priorities, entries }
    }
}

/// `g` per SLA constraint and `h` for queue feasibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintValues {
    pub g: Vec<f64>,
    pub h: f64,
}

/// `r (1 - sum alpha u) + s * sum |gamma' - gamma| / (|C| |P|)`; lies in `[0, 1]`.
pub fn single_stage_cost(state: &SystemState, weights: &WorkloadWeights, targets: &SlaTargets, cw: CostWeights) -> f64 {
    let weighted_util: f64 = weights.as_slice().iter().zip(&state.utilizations).map(|(a, u)| a * u).sum();
    let gap: f64 = targets.entries.iter().map(|&(i, t)| (state.sla_attainment[i] - t).abs()).sum();
    cw.r * (1.0 - weighted_util) + cw.s * gap / targets.n_pairs as f64
}

/// `g = gamma - gamma'` for every constrained pair and `h = 1 - q`.
pub fn constraint_values(state: &SystemState, targets: &SlaTargets) -> ConstraintValues {
    ConstraintValues {
        g: targets.entries.iter().map(|&(i, t)| t - state.sla_attainment[i]).collect(),
        h: if state.feasible { 0.0 } else { 1.0 },
    }
}
