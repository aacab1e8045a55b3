//! Closed-form test problems with known gradient and Hessian.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::optimizer::{BoxError, StageModel, StageSample};
use crate::rng::stream_rng;

/// Linear constraint `g(θ) = offset + coeffs · θ`, violated when positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl LinearConstraint {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self { coeffs: vec![0.0; dim], offset: value }
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.offset + self.coeffs.iter().zip(theta).map(|(c, t)| c * t).sum::<f64>()
    }
}

/// `J(θ) = (θ − θ°)ᵀ A (θ − θ°) / scale` on `[0, w_max]^N`, where `scale`
/// is the maximum of the quadratic over the box so that `J ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    pub center: Vec<f64>,
    pub a: DMatrix<f64>,
    pub w_max: u32,
    pub scale: f64,
    pub constraints: Vec<LinearConstraint>,
    /// Constant queue-feasibility constraint value.
    pub h: f64,
    /// Standard deviation of additive Gaussian noise on sampled costs.
    pub noise_sd: f64,
    /// Evaluate on the integer lattice (the optimizers then apply `Γ`).
    pub discrete: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("A must be a symmetric positive definite {0}x{0} matrix")]
    NotSpd(usize),
    #[error("dimension {0} is outside 1..=20")]
    Dimension(usize),
    #[error("constraint has {got} coefficients, expected {expected}")]
    ConstraintLength { expected: usize, got: usize },
}

impl SyntheticProblem {
    pub fn new(center: Vec<f64>, a: DMatrix<f64>, w_max: u32) -> Result<Self, SyntheticError> {
        let n = center.len();
        if n == 0 || n > 20 {
            return Err(SyntheticError::Dimension(n));
        }
        if a.shape() != (n, n) || (&a - a.transpose()).amax() > 1e-12 || a.clone().cholesky().is_none() {
            return Err(SyntheticError::NotSpd(n));
        }
        let mut p = Self { center, a, w_max, scale: 1.0, constraints: Vec::new(), h: 0.0, noise_sd: 0.0, discrete: false };
        // A convex quadratic attains its box maximum at a corner.
        let corners = (0..1u64 << n).map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { w_max as f64 } else { 0.0 }).collect::<Vec<_>>());
        p.scale = corners.map(|c| p.quadratic(&c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Ok(p)
    }

    /// `A = I + 11ᵀ` centred at `center`: a well-conditioned problem with
    /// off-diagonal curvature as large as the diagonal excess.
    pub fn coupled(center: Vec<f64>, w_max: u32) -> Self {
        let n = center.len();
        let a = DMatrix::identity(n, n) + DMatrix::from_element(n, n, 1.0);
        Self::new(center, a, w_max).expect("I + 11ᵀ is SPD")
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Result<Self, SyntheticError> {
        if c.coeffs.len() != self.dim() {
            return Err(SyntheticError::ConstraintLength { expected: self.dim(), got: c.coeffs.len() });
        }
        self.constraints.push(c);
        Ok(self)
    }

    pub fn with_noise(mut self, sd: f64) -> Self {
        self.noise_sd = sd;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn discrete(mut self, discrete: bool) -> Self {
        self.discrete = discrete;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn offset(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), theta.iter().zip(&self.center).map(|(t, c)| t - c))
    }

    fn quadratic(&self, theta: &[f64]) -> f64 {
        let x = self.offset(theta);
        x.dot(&(&self.a * &x))
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.quadratic(theta) / self.scale
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        ((&self.a * self.offset(theta)) * (2.0 / self.scale)).iter().copied().collect()
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        &self.a * (2.0 / self.scale)
    }

    pub fn constraint_values(&self, theta: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.eval(theta)).collect()
    }
}

/// One noisy evaluation: `J(θ) + σZ`, exact constraints.
pub fn synthetic_eval<R: Rng + ?Sized>(problem: &SyntheticProblem, theta: &[f64], rng: &mut R) -> StageSample {
    let noise = if problem.noise_sd > 0.0 { problem.noise_sd * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
    StageSample { cost: problem.objective(theta) + noise, g: problem.constraint_values(theta), h: problem.h }
}

impl StageModel for SyntheticProblem {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn w_max(&self) -> u32 {
        self.w_max
    }

    fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn is_discrete(&self) -> bool {
        self.discrete
    }

    fn sample(&self, point: &[f64], seed: u64) -> Result<StageSample, BoxError> {
        Ok(synthetic_eval(self, point, &mut stream_rng(seed, &[])))
    }
}
