//! One iteration of each SASOC variant.

use nalgebra::DMatrix;

use super::estimate::{bernoulli_perturbation, hessian_rank_one_update, p_vector, q_vector, woodbury_inverse_update};
use super::lagrange::{lagrangian_sample, update_l_estimates, LagrangeState};
use super::stage::{StageModel, StageSample};
use super::{Algorithm, OptimizerError, TraceRow};
use crate::exec::{try_map_indexed, Execution};
use crate::projection::{gamma_bar_clamp, gamma_project, upsilon_project, ProjectionParams, SpdParams};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::model::ContinuousParam;

use super::schedule::StepSizeSchedule;

/// Which perturbation scale divides the Newton step of the Woodbury
/// variant. The Newton variant always uses `δ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WoodburyDivisor {
    Delta1,
    #[default]
    Delta2,
}

/// Everything an iteration needs besides the mutable state.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub algorithm: Algorithm,
    pub replications: usize,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub projection: ProjectionParams,
    pub spd: SpdParams,
    pub schedule: StepSizeSchedule,
    pub lambda_cap: Option<f64>,
    pub woodbury_divisor: WoodburyDivisor,
    pub seed: u64,
    pub execution: Execution,
}

/// Optimizer state between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Index of the next iteration, starting at 1.
    pub n: u64,
    pub theta: ContinuousParam,
    pub l_nominal: f64,
    pub l_perturbed: f64,
    pub lambda: LagrangeState,
    /// Hessian estimate `H` (Newton variant only).
    pub hessian: DMatrix<f64>,
    /// Inverse Hessian estimate `M` (Newton and Woodbury variants).
    pub inverse: DMatrix<f64>,
}

impl OptimizerState {
    pub fn new(
        algorithm: Algorithm,
        theta: ContinuousParam,
        n_constraints: usize,
        lambda_init: f64,
        omega: f64,
        spd: &SpdParams,
    ) -> Result<Self, OptimizerError> {
        let dim = theta.len();
        let hessian = DMatrix::identity(dim, dim) * omega;
        let inverse = match algorithm {
            Algorithm::Newton => spd_inverse(&hessian, spd)?,
            _ => DMatrix::identity(dim, dim) * omega,
        };
        Ok(Self { n: 1, theta, l_nominal: 0.0, l_perturbed: 0.0, lambda: LagrangeState::new(n_constraints, lambda_init), hessian, inverse })
    }
}

/// `Υ(h)⁻¹`.
pub fn spd_inverse(h: &DMatrix<f64>, spd: &SpdParams) -> Result<DMatrix<f64>, OptimizerError> {
    upsilon_project(h, spd)?.try_inverse().ok_or(OptimizerError::Singular)
}

/// Evaluation point: the randomized lattice projection for discrete models,
/// the box clamp otherwise.
fn evaluation_point<M: StageModel + ?Sized, R: rand::Rng>(model: &M, x: &[f64], params: &ProjectionParams, rng: &mut R) -> Vec<f64> {
    if model.is_discrete() {
        gamma_project(&ContinuousParam(x.to_vec()), model.w_max(), params, rng).0.into_iter().map(f64::from).collect()
    } else {
        gamma_bar_clamp(x, model.w_max()).0
    }
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Runs one iteration of the configured variant and returns its trace row.
///
/// The nominal and perturbed replications of iteration `n` share the
/// simulation seeds `derive_seed(seed, [REPLICATION, n, m])`, so their
/// difference is driven by the parameter change rather than by noise.
pub fn sasoc_iteration<M: StageModel + ?Sized>(model: &M, state: &mut OptimizerState, cfg: &IterationConfig) -> Result<TraceRow, OptimizerError> {
    let n = state.n;
    let dim = model.dimension();
    let k = cfg.replications;
    let second_order = cfg.algorithm != Algorithm::Gradient;

    let mut prng = stream_rng(cfg.seed, &[stream::PERTURBATION, n]);
    let delta = bernoulli_perturbation(dim, &mut prng);
    let delta_hat = if second_order { bernoulli_perturbation(dim, &mut prng) } else { Vec::new() };

    let theta = &state.theta.0;
    let perturbed: Vec<f64> = if second_order {
        (0..dim).map(|i| theta[i] + cfg.delta1 * delta[i] + cfg.delta2 * delta_hat[i]).collect()
    } else {
        (0..dim).map(|i| theta[i] + cfg.delta * delta[i]).collect()
    };

    let mut jrng = stream_rng(cfg.seed, &[stream::PROJECTION, n]);
    let nominal_pt = evaluation_point(model, theta, &cfg.projection, &mut jrng);
    let perturbed_pt = evaluation_point(model, &perturbed, &cfg.projection, &mut jrng);

    let samples: Vec<StageSample> = try_map_indexed(2 * k, cfg.execution, |i| {
        let pt = if i < k { &nominal_pt } else { &perturbed_pt };
        model.sample(pt, derive_seed(cfg.seed, &[stream::REPLICATION, n, (i % k) as u64]))
    })
    .map_err(|source| OptimizerError::Model { iteration: n, source })?;
    let (nominal, perturbed_s) = samples.split_at(k);

    let lag = |s: &StageSample| lagrangian_sample(s.cost, &s.g, s.h, &state.lambda);
    let d = cfg.schedule.d(n);
    let nominal_l: Vec<f64> = nominal.iter().map(lag).collect();
    let perturbed_l: Vec<f64> = perturbed_s.iter().map(lag).collect();
    state.l_nominal = update_l_estimates(state.l_nominal, &nominal_l, d);
    state.l_perturbed = update_l_estimates(state.l_perturbed, &perturbed_l, d);
    let diff = state.l_nominal - state.l_perturbed;

    let b = cfg.schedule.b(n);
    let mut woodbury_skipped = false;
    let step: Vec<f64> = match cfg.algorithm {
        Algorithm::Gradient => delta.iter().map(|&di| b * diff / (cfg.delta * di)).collect(),
        Algorithm::Newton | Algorithm::Woodbury => {
            let divisor = match (cfg.algorithm, cfg.woodbury_divisor) {
                (Algorithm::Woodbury, WoodburyDivisor::Delta1) => cfg.delta1,
                _ => cfg.delta2,
            };
            let grad: Vec<f64> = delta_hat.iter().map(|&dh| diff / (divisor * dh)).collect();
            let step = (0..dim).map(|i| b * (0..dim).map(|j| state.inverse[(i, j)] * grad[j]).sum::<f64>()).collect();

            let p = p_vector(cfg.delta1, &delta);
            let q = q_vector(cfg.delta2, &delta_hat);
            if cfg.algorithm == Algorithm::Newton {
                state.hessian = hessian_rank_one_update(&state.hessian, b, -diff, &p, &q);
                state.inverse = spd_inverse(&state.hessian, &cfg.spd)?;
            } else {
                match woodbury_inverse_update(&state.inverse, b, -diff, &p, &q) {
                    Some(m) => state.inverse = upsilon_project(&m, &cfg.spd)?,
                    None => woodbury_skipped = true,
                }
            }
            step
        }
    };

    let g_mean: Vec<f64> = (0..model.n_constraints()).map(|c| mean(nominal.iter().map(|s| s.g[c]), k)).collect();
    let h_mean = mean(nominal.iter().map(|s| s.h), k);
    let cost_mean = mean(nominal.iter().map(|s| s.cost), k);
    state.lambda.ascend(cfg.schedule.a(n), &g_mean, h_mean, cfg.lambda_cap);

    let theta_before = state.theta.clone();
    let moved: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
    state.theta = gamma_bar_clamp(&moved, model.w_max());
    state.n += 1;

    Ok(TraceRow {
        n,
        w_sum: nominal_pt.iter().sum(),
        cost: cost_mean,
        l_nominal: state.l_nominal,
        l_perturbed: state.l_perturbed,
        lambda: state.lambda.clone(),
        g_mean,
        h_mean,
        theta_bar: theta_before.0,
        point: nominal_pt,
        woodbury_skipped,
    })
}

/// First-order variant.
pub fn sasoc_g_iteration<M: StageModel + ?Sized>(model: &M, state: &mut OptimizerState, cfg: &IterationConfig) -> Result<TraceRow, OptimizerError> {
    sasoc_iteration(model, state, &IterationConfig { algorithm: Algorithm::Gradient, ..cfg.clone() })
}

/// Newton variant with an explicit Hessian estimate.
pub fn sasoc_h_iteration<M: StageModel + ?Sized>(model: &M, state: &mut OptimizerState, cfg: &IterationConfig) -> Result<TraceRow, OptimizerError> {
    sasoc_iteration(model, state, &IterationConfig { algorithm: Algorithm::Newton, ..cfg.clone() })
}

/// Newton variant with the inverse Hessian updated by Woodbury's identity.
pub fn sasoc_w_iteration<M: StageModel + ?Sized>(model: &M, state: &mut OptimizerState, cfg: &IterationConfig) -> Result<TraceRow, OptimizerError> {
    sasoc_iteration(model, state, &IterationConfig { algorithm: Algorithm::Woodbury, ..cfg.clone() })
}
