//! Projections used by the optimizers: the randomized lattice projection
//! `Γ`, the box clamp `Γ̄`, and the SPD projection `Υ` for Hessian estimates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

use crate::model::{ContinuousParam, WorkerParam};

/// Smoothing kernel for `Γ`: a C¹ map of `[0, 1]` onto itself with
/// `f(0) = 0` and `f(1) = 1`.
pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProjectionParams {
    /// Half-width of the randomized band around each lattice midpoint.
    pub zeta: f64,
    pub f: Kernel,
}

impl ProjectionParams {
    pub fn new(zeta: f64) -> Result<Self, ProjectionError> {
        Self::with_kernel(zeta, Arc::new(|x| x))
    }

    pub fn with_kernel(zeta: f64, f: Kernel) -> Result<Self, ProjectionError> {
        if !(zeta > 0.0 && 2.0 * zeta < 1.0) {
            return Err(ProjectionError::InvalidZeta(zeta));
        }
        Ok(Self { zeta, f })
    }
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self::new(0.1).expect("default zeta is valid")
    }
}

impl fmt::Debug for ProjectionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProjectionParams").field("zeta", &self.zeta).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdParams {
    /// Eigenvalue floor; the ceiling is `1 / epsilon`.
    pub epsilon: f64,
}

impl SpdParams {
    pub fn new(epsilon: f64) -> Result<Self, ProjectionError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ProjectionError::InvalidEpsilon(epsilon));
        }
        Ok(Self { epsilon })
    }

    pub fn floor(&self) -> f64 {
        self.epsilon
    }

    pub fn ceiling(&self) -> f64 {
        1.0 / self.epsilon
    }
}

impl Default for SpdParams {
    fn default() -> Self {
        Self { epsilon: 0.01 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("zeta must satisfy 0 < zeta < 0.5, got {0}")]
    InvalidZeta(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

/// Projects one coordinate onto `{0, 1, ..., w_max}`.
pub fn gamma_project_scalar<R: Rng + ?Sized>(x: f64, w_max: u32, params: &ProjectionParams, rng: &mut R) -> u32 {
    if x <= 0.0 {
        return 0;
    }
    if x >= w_max as f64 {
        return w_max;
    }
    let lo = x.floor();
    let mid = lo + 0.5;
    let (zeta, lo_u) = (params.zeta, lo as u32);
    if x <= mid - zeta {
        lo_u
    } else if x >= mid + zeta {
        lo_u + 1
    } else {
        let p_down = (params.f)((mid + zeta - x) / (2.0 * zeta)).clamp(0.0, 1.0);
        if rng.random::<f64>() < p_down { lo_u } else { lo_u + 1 }
    }
}

/// `Γ`: componentwise randomized projection of `θ̄` onto the lattice.
pub fn gamma_project<R: Rng + ?Sized>(theta: &ContinuousParam, w_max: u32, params: &ProjectionParams, rng: &mut R) -> WorkerParam {
    WorkerParam(theta.0.iter().map(|&x| gamma_project_scalar(x, w_max, params, rng)).collect())
}

/// `Γ̄`: componentwise clamp onto `[0, w_max]`.
pub fn gamma_bar_clamp(theta: &[f64], w_max: u32) -> ContinuousParam {
    ContinuousParam(theta.iter().map(|&x| x.min(w_max as f64).max(0.0)).collect())
}

/// `Υ`: symmetrizes `h` and clamps its eigenvalues into `[ε, 1/ε]`.
pub fn upsilon_project(h: &DMatrix<f64>, params: &SpdParams) -> Result<DMatrix<f64>, ProjectionError> {
    if !h.is_square() {
        return Err(ProjectionError::NotSquare(h.nrows(), h.ncols()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(ProjectionError::NonFinite);
    }
    let sym = (h + h.transpose()) * 0.5;
    let mut eig = SymmetricEigen::new(sym);
    for v in eig.eigenvalues.iter_mut() {
        *v = v.clamp(params.floor(), params.ceiling());
    }
    let out = eig.recompose();
    // Recomposition leaves rounding-level asymmetry; remove it exactly.
    Ok((&out + out.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p() -> ProjectionParams {
        ProjectionParams::default()
    }

    #[test]
    fn lattice_points_are_fixed() {
        let mut rng = stream_rng(1, &[]);
        for k in 0..=5 {
            assert_eq!(gamma_project_scalar(k as f64, 5, &p(), &mut rng), k);
        }
    }

    #[test]
    fn below_band_rounds_down() {
        let mut rng = stream_rng(1, &[]);
        for _ in 0..100 {
            assert_eq!(gamma_project_scalar(3.2, 5, &p(), &mut rng), 3);
            assert_eq!(gamma_project_scalar(3.7, 5, &p(), &mut rng), 4);
        }
    }

    #[test]
    fn out_of_box_values_saturate() {
        let mut rng = stream_rng(1, &[]);
        assert_eq!(gamma_project_scalar(-3.0, 5, &p(), &mut rng), 0);
        assert_eq!(gamma_project_scalar(9.5, 5, &p(), &mut rng), 5);
    }

    #[test]
    fn midpoint_is_a_fair_coin() {
        let mut rng = stream_rng(7, &[]);
        let n = 100_000;
        let down = (0..n).filter(|_| gamma_project_scalar(3.5, 5, &p(), &mut rng) == 3).count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((down - n as f64 * 0.5).abs() <= 3.0 * sd, "{down}");
    }

    #[test]
    fn custom_kernel_is_used() {
        // f = 0 inside the band (not C¹-valid, only to observe plumbing)
        let params = ProjectionParams::with_kernel(0.1, Arc::new(|_| 0.0)).unwrap();
        let mut rng = stream_rng(7, &[]);
        assert!((0..100).all(|_| gamma_project_scalar(3.45, 5, &params, &mut rng) == 4));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ProjectionParams::new(0.0).is_err());
        assert!(ProjectionParams::new(0.5).is_err());
        assert!(SpdParams::new(1.0).is_err());
        assert!(SpdParams::new(0.0).is_err());
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(gamma_bar_clamp(&[-2.0, 10.0, 2.5], 5).0, vec![0.0, 5.0, 2.5]);
    }

    #[test]
    fn upsilon_examples() {
        let spd = SpdParams::default();
        let id = DMatrix::<f64>::identity(3, 3);
        assert_abs_diff_eq!(upsilon_project(&id, &spd).unwrap(), id, epsilon = 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, 2.0]));
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.01, 2.0]));
        assert_abs_diff_eq!(upsilon_project(&d, &spd).unwrap(), want, epsilon = 1e-12);
        let big = DMatrix::<f64>::identity(2, 2) * 500.0;
        assert_abs_diff_eq!(upsilon_project(&big, &spd).unwrap(), DMatrix::identity(2, 2) * 100.0, epsilon = 1e-12);
    }

    #[test]
    fn upsilon_rejects_non_finite() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert_eq!(upsilon_project(&m, &SpdParams::default()), Err(ProjectionError::NonFinite));
    }

    proptest! {
        #[test]
        fn gamma_is_within_one_of_input(x in -2.0f64..8.0, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, &[]);
            let k = gamma_project_scalar(x, 5, &p(), &mut rng) as f64;
            let c = x.clamp(0.0, 5.0);
            prop_assert!(k == c.floor() || k == c.ceil());
        }

        #[test]
        fn gamma_is_nearest_rounding_outside_band(base in 0u32..5, off in 0.0f64..1.0, seed in any::<u64>()) {
            prop_assume!((off - 0.5).abs() >= 0.1);
            let x = base as f64 + off;
            let mut rng = stream_rng(seed, &[]);
            prop_assert_eq!(gamma_project_scalar(x, 5, &p(), &mut rng), x.round() as u32);
        }

        #[test]
        fn upsilon_is_symmetric_bounded_idempotent(v in proptest::collection::vec(-200.0f64..200.0, 16)) {
            let spd = SpdParams::default();
            let m = DMatrix::from_vec(4, 4, v);
            let y = upsilon_project(&m, &spd).unwrap();
            prop_assert!((&y - y.transpose()).amax() <= 1e-12);
            for e in SymmetricEigen::new(y.clone()).eigenvalues.iter() {
                prop_assert!(*e >= 0.01 - 1e-10 && *e <= 100.0 + 1e-10);
            }
            let y2 = upsilon_project(&y, &spd).unwrap();
            prop_assert!((&y2 - &y).amax() <= 1e-10);
        }
    }
}
