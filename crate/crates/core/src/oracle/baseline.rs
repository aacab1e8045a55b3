//! Budget-matched comparison search: simulated annealing with random
//! restarts over the lattice, on a penalty-augmented objective.

use rand::Rng;

use super::brute::{evaluate_point, BruteForceError, BruteForceOptions, PointEstimate};
use crate::exec::Execution;
use crate::optimizer::StageModel;
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOptions {
    /// Number of point evaluations.
    pub evaluations: u64,
    /// Replications averaged per evaluation.
    pub reps_per_eval: usize,
    /// Weight of constraint violation in the search objective.
    pub penalty: f64,
    pub initial_temperature: f64,
    /// Geometric cooling factor per evaluation.
    pub cooling: f64,
    /// Probability of jumping to a uniformly random point.
    pub restart_probability: f64,
    /// Starting point; defaults to `w_max / 2` (rounded down) in every cell.
    pub start: Option<Vec<u32>>,
    pub seed: u64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            evaluations: 5000,
            reps_per_eval: 100,
            penalty: 10.0,
            initial_temperature: 0.1,
            cooling: 0.999,
            restart_probability: 0.05,
            start: None,
            seed: 0,
        }
    }
}

impl BaselineOptions {
    /// Simulations consumed by a full run.
    pub fn simulations(&self) -> u64 {
        self.evaluations * self.reps_per_eval as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTraceRow {
    pub evaluation: u64,
    pub estimate: PointEstimate,
    pub penalized: f64,
    pub accepted: bool,
    /// Headcount of the best point so far.
    pub best_w_sum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub best: PointEstimate,
    pub trace: Vec<BaselineTraceRow>,
    pub simulations: u64,
}

/// Search objective: `J + penalty · (Σ max(g, 0) + h)`.
pub fn penalized(p: &PointEstimate, penalty: f64) -> f64 {
    p.j_mean + penalty * (p.g_mean.iter().map(|g| g.max(0.0)).sum::<f64>() + p.h_mean.max(0.0))
}

/// Best point so far: feasible beats infeasible; then lower penalized value.
fn better(a: &PointEstimate, b: &PointEstimate, penalty: f64) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => penalized(a, penalty) < penalized(b, penalty),
    }
}

/// Runs the baseline. Every evaluation averages `reps_per_eval` replications
/// on shared seeds, so the objective seen by the search is the same
/// common-random-number estimate the brute-force oracle computes.
pub fn baseline_search<M: StageModel + ?Sized>(model: &M, opts: &BaselineOptions) -> Result<BaselineResult, BruteForceError> {
    if opts.reps_per_eval == 0 {
        return Err(BruteForceError::NoReplications);
    }
    let (dim, w_max) = (model.dimension(), model.w_max());
    let eval_opts = BruteForceOptions { replications: opts.reps_per_eval, seed: opts.seed, execution: Execution::Sequential };
    let mut rng = stream_rng(opts.seed, &[stream::BASELINE]);

    let start: Vec<u32> = match &opts.start {
        Some(s) => s.iter().map(|&x| x.min(w_max)).collect(),
        None => vec![w_max / 2; dim],
    };
    let mut current = evaluate_point(model, &start, &eval_opts)?;
    let mut best = current.clone();
    let mut trace = vec![BaselineTraceRow {
        evaluation: 1,
        penalized: penalized(&current, opts.penalty),
        estimate: current.clone(),
        accepted: true,
        best_w_sum: best.w_sum(),
    }];
    let mut temperature = opts.initial_temperature;

    for evaluation in 2..=opts.evaluations.max(1) {
        let candidate_theta: Vec<u32> = if rng.random::<f64>() < opts.restart_probability {
            (0..dim).map(|_| rng.random_range(0..=w_max)).collect()
        } else {
            let mut t = current.theta.clone();
            let i = rng.random_range(0..dim);
            t[i] = if t[i] == 0 {
                1.min(w_max)
            } else if t[i] == w_max || rng.random::<bool>() {
                t[i] - 1
            } else {
                t[i] + 1
            };
            t
        };
        let candidate = evaluate_point(model, &candidate_theta, &eval_opts)?;
        let delta = penalized(&candidate, opts.penalty) - penalized(&current, opts.penalty);
        let accepted = delta <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
        if better(&candidate, &best, opts.penalty) {
            best = candidate.clone();
        }
        trace.push(BaselineTraceRow {
            evaluation,
            penalized: penalized(&candidate, opts.penalty),
            estimate: candidate.clone(),
            accepted,
            best_w_sum: best.w_sum(),
        });
        if accepted {
            current = candidate;
        }
        temperature *= opts.cooling;
    }
    let simulations = trace.len() as u64 * opts.reps_per_eval as u64;
    Ok(BaselineResult { best, trace, simulations })
}
