//! SPSA estimators and the rank-one Hessian updates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Draws a vector of independent symmetric ±1 perturbations.
pub fn bernoulli_perturbation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// One-sided SPSA gradient sample `(L(θ+δΔ) − L(θ)) / (δ Δ_i)`.
pub fn spsa_gradient(l_nominal: f64, l_perturbed: f64, delta: f64, perturbation: &[f64]) -> Vec<f64> {
    perturbation.iter().map(|&d| (l_perturbed - l_nominal) / (delta * d)).collect()
}

/// `P = (1/δ1)Δ⁻¹` as a column vector.
pub fn p_vector(delta1: f64, perturbation: &[f64]) -> DVector<f64> {
    DVector::from_iterator(perturbation.len(), perturbation.iter().map(|&d| 1.0 / (delta1 * d)))
}

/// `Q = (1/δ2)Δ̂⁻¹`, kept as a column vector and used transposed.
pub fn q_vector(delta2: f64, perturbation_hat: &[f64]) -> DVector<f64> {
    p_vector(delta2, perturbation_hat)
}

/// Hessian sample `(L(θ+δ1Δ+δ2Δ̂) − L(θ)) P Qᵀ`, entry `(i, j)` equal to
/// `ΔL / (δ1 Δ_i δ2 Δ̂_j)`.
pub fn spsa_hessian(l_nominal: f64, l_perturbed: f64, p: &DVector<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    p * q.transpose() * (l_perturbed - l_nominal)
}

/// Unprojected Hessian recursion `H ← (1−b)H + b(L̄′−L̄) P Qᵀ`.
pub fn hessian_rank_one_update(h: &DMatrix<f64>, b: f64, l_diff: f64, p: &DVector<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    h * (1.0 - b) + p * q.transpose() * (b * l_diff)
}

/// Denominators closer to zero than this skip the Woodbury update.
pub const WOODBURY_GUARD: f64 = 1e-12;

/// Unprojected inverse recursion obtained from the rank-one Hessian update by
/// Woodbury's identity:
/// `M ← (M/(1−b)) [I − z P Qᵀ M / (1 − b + z Qᵀ M P)]` with `z = b(L̄′−L̄)`.
/// Returns `None` when the denominator vanishes (the update is skipped).
pub fn woodbury_inverse_update(m: &DMatrix<f64>, b: f64, l_diff: f64, p: &DVector<f64>, q: &DVector<f64>) -> Option<DMatrix<f64>> {
    let z = b * l_diff;
    let mp = m * p;
    let denom = 1.0 - b + z * q.dot(&mp);
    if denom.abs() <= WOODBURY_GUARD || (1.0 - b).abs() <= WOODBURY_GUARD {
        return None;
    }
    // P Qᵀ M = P (Mᵀ Q)ᵀ
    let qm = m.transpose() * q;
    let n = m.nrows();
    let bracket = DMatrix::<f64>::identity(n, n) - p * qm.transpose() * (z / denom);
    Some(m * bracket / (1.0 - b))
}
