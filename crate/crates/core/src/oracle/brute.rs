//! Exhaustive evaluation of every staffing vector on a small lattice.

use std::io;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::exec::{try_map_indexed, Execution};
use crate::model::WorkerParam;
use crate::optimizer::{BoxError, StageModel, StageSample};
use crate::rng::{derive_seed, stream};

/// Largest lattice the brute-force search accepts.
pub const MAX_LATTICE_POINTS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("lattice has {points} points ({base}^{dim}), above the limit of {limit}")]
    LatticeTooLarge { points: u128, base: u64, dim: usize, limit: u64 },
    #[error("at least one replication per point is required")]
    NoReplications,
    #[error("evaluation of {theta} failed: {source}")]
    Model { theta: WorkerParam, source: BoxError },
}

/// Sample means of one lattice point with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate {
    pub theta: Vec<u32>,
    pub j_mean: f64,
    pub j_half_width: f64,
    pub g_mean: Vec<f64>,
    pub g_half_width: Vec<f64>,
    pub h_mean: f64,
    /// Every SLA constraint has `mean − half-width ≤ 0` and the queue
    /// constraint never fired (`mean h ≤ 0`).
    pub feasible: bool,
}

impl PointEstimate {
    pub fn from_samples(theta: Vec<u32>, samples: &[StageSample]) -> Self {
        let n_g = samples.first().map_or(0, |s| s.g.len());
        let (j_mean, j_half_width) = mean_and_half_width(samples.iter().map(|s| s.cost));
        let (g_mean, g_half_width): (Vec<f64>, Vec<f64>) =
            (0..n_g).map(|c| mean_and_half_width(samples.iter().map(|s| s.g[c]))).unzip();
        let h_mean = samples.iter().map(|s| s.h).sum::<f64>() / samples.len() as f64;
        let feasible = g_mean.iter().zip(&g_half_width).all(|(m, hw)| m - hw <= 0.0) && h_mean <= 0.0;
        Self { theta, j_mean, j_half_width, g_mean, g_half_width, h_mean, feasible }
    }

    pub fn w_sum(&self) -> u64 {
        self.theta.iter().map(|&t| t as u64).sum()
    }
}

/// Mean and two-sided 95% Student-t half-width; the half-width is zero for a
/// single sample.
pub fn mean_and_half_width(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof").inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceOptions {
    pub replications: usize,
    pub seed: u64,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// One entry per lattice point, in lattice-index order.
    pub points: Vec<PointEstimate>,
    /// Index of the feasible point with the lowest estimated `J` (ties go to
    /// the lower headcount, then the lower lattice index).
    pub best: Option<usize>,
    pub replications: usize,
}

impl BruteForceResult {
    pub fn best_point(&self) -> Option<&PointEstimate> {
        self.best.map(|i| &self.points[i])
    }

    pub fn is_infeasible(&self) -> bool {
        self.best.is_none()
    }

    pub fn lookup(&self, theta: &[u32], w_max: u32) -> Option<&PointEstimate> {
        if theta.iter().any(|&t| t > w_max) {
            return None;
        }
        self.points.get(WorkerParam(theta.to_vec()).lattice_index(w_max))
    }

    /// CSV table: `theta_*, j_mean, j_half_width, g_*, g_half_width_*,
    /// h_mean, feasible`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let (dim, n_g) = self.points.first().map_or((0, 0), |p| (p.theta.len(), p.g_mean.len()));
        let mut header: Vec<String> = (0..dim).map(|i| format!("theta_{i}")).collect();
        header.extend(["j_mean".to_string(), "j_half_width".to_string()]);
        header.extend((0..n_g).map(|i| format!("g_{i}")));
        header.extend((0..n_g).map(|i| format!("g_half_width_{i}")));
        header.extend(["h_mean".to_string(), "feasible".to_string()]);
        w.write_record(&header)?;
        for p in &self.points {
            let mut rec: Vec<String> = p.theta.iter().map(u32::to_string).collect();
            rec.push(p.j_mean.to_string());
            rec.push(p.j_half_width.to_string());
            rec.extend(p.g_mean.iter().map(f64::to_string));
            rec.extend(p.g_half_width.iter().map(f64::to_string));
            rec.push(p.h_mean.to_string());
            rec.push(u8::from(p.feasible).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of replication `m` of every lattice point. Sharing these across
/// points gives common random numbers.
pub fn replication_seed(seed: u64, m: usize) -> u64 {
    derive_seed(seed, &[stream::REPLICATION, m as u64])
}

/// Number of points of the lattice `{0..=w_max}^dim`, or an error above the
/// guard.
pub fn lattice_size(dim: usize, w_max: u32) -> Result<u64, BruteForceError> {
    let base = w_max as u64 + 1;
    let points = (base as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if points > MAX_LATTICE_POINTS as u128 {
        return Err(BruteForceError::LatticeTooLarge { points, base, dim, limit: MAX_LATTICE_POINTS });
    }
    Ok(points as u64)
}

/// Evaluates one lattice point on the common replication seeds.
pub fn evaluate_point<M: StageModel + ?Sized>(model: &M, theta: &[u32], opts: &BruteForceOptions) -> Result<PointEstimate, BruteForceError> {
    let point: Vec<f64> = theta.iter().map(|&t| t as f64).collect();
    let samples = (0..opts.replications)
        .map(|m| model.sample(&point, replication_seed(opts.seed, m)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| BruteForceError::Model { theta: WorkerParam(theta.to_vec()), source })?;
    Ok(PointEstimate::from_samples(theta.to_vec(), &samples))
}

/// Simulates every point of `{0..=w_max}^N` and returns the feasible point
/// with the lowest estimated objective.
pub fn brute_force_search<M: StageModel + ?Sized>(model: &M, opts: &BruteForceOptions) -> Result<BruteForceResult, BruteForceError> {
    if opts.replications == 0 {
        return Err(BruteForceError::NoReplications);
    }
    let (dim, w_max) = (model.dimension(), model.w_max());
    let size = lattice_size(dim, w_max)?;
    let points = try_map_indexed(size as usize, opts.execution, |idx| {
        let theta = WorkerParam::from_lattice_index(idx, dim, w_max);
        evaluate_point(model, &theta.0, opts)
    })?;
    let best = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.feasible)
        .min_by(|(ia, a), (ib, b)| a.j_mean.total_cmp(&b.j_mean).then(a.w_sum().cmp(&b.w_sum())).then(ia.cmp(ib)))
        .map(|(i, _)| i);
    Ok(BruteForceResult { points, best, replications: opts.replications })
}
