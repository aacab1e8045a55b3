//! Lagrange multipliers and the fast-timescale Lagrangian averages.

use serde::{Deserialize, Serialize};

/// Multipliers for the SLA constraints (one per constrained
/// customer/priority pair) and for the queue-feasibility constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeState {
    pub sla: Vec<f64>,
    pub queue: f64,
}

impl LagrangeState {
    pub fn new(n_sla: usize, initial: f64) -> Self {
        let v = initial.max(0.0);
        Self { sla: vec![v; n_sla], queue: v }
    }

    /// Dual ascent step `λ ← (λ + a·g)⁺`, with an optional upper cap.
    pub fn ascend(&mut self, step: f64, g: &[f64], h: f64, cap: Option<f64>) {
        debug_assert_eq!(g.len(), self.sla.len());
        let proj = |x: f64| {
            let x = x.max(0.0);
            cap.map_or(x, |c| x.min(c))
        };
        for (l, gi) in self.sla.iter_mut().zip(g) {
            *l = proj(*l + step * gi);
        }
        self.queue = proj(self.queue + step * h);
    }

    pub fn all_nonnegative(&self) -> bool {
        self.queue >= 0.0 && self.sla.iter().all(|&l| l >= 0.0)
    }
}

/// Single-stage Lagrangian `c + Σ λ_ij g_ij + λ_f h`.
pub fn lagrangian_sample(cost: f64, g: &[f64], h: f64, lambda: &LagrangeState) -> f64 {
    cost + lambda.sla.iter().zip(g).map(|(l, gi)| l * gi).sum::<f64>() + lambda.queue * h
}

/// Runs one exponential-averaging step per sample, in order.
pub fn update_l_estimates(l: f64, samples: &[f64], d: f64) -> f64 {
    samples.iter().fold(l, |acc, &s| acc + d * (s - acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_multipliers_give_cost() {
        assert_eq!(lagrangian_sample(0.4, &[0.3, -0.1], 1.0, &LagrangeState::new(2, 0.0)), 0.4);
    }

    #[test]
    fn weighted_constraint_term() {
        let lambda = LagrangeState { sla: vec![2.0], queue: 0.0 };
        assert_abs_diff_eq!(lagrangian_sample(0.25, &[0.05], 0.0, &lambda), 0.35, epsilon = 1e-15);
    }

    #[test]
    fn slack_constraints_lower_the_lagrangian() {
        let lambda = LagrangeState { sla: vec![1.0, 0.5], queue: 3.0 };
        assert!(lagrangian_sample(0.3, &[-0.1, -0.2], 0.0, &lambda) < 0.3);
    }

    #[test]
    fn single_averaging_step() {
        assert_abs_diff_eq!(update_l_estimates(0.0, &[1.0], 0.1), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn constant_samples_are_a_fixed_point() {
        let mut l = 0.0;
        for n in 1..2000u64 {
            l = update_l_estimates(l, &[0.7; 10], 1.0 / (n as f64).powf(0.66));
        }
        assert_abs_diff_eq!(l, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn alternating_samples_average_to_half() {
        let mut l = 0.0;
        for n in 1..=20_000u64 {
            l = update_l_estimates(l, &[0.0, 1.0], 1.0 / (n as f64).powf(0.66));
        }
        assert!((l - 0.5).abs() < 0.01, "{l}");
    }

    #[test]
    fn ascent_projects_and_caps() {
        let mut lambda = LagrangeState::new(2, 0.1);
        lambda.ascend(1.0, &[-1.0, 5.0], -0.5, None);
        assert_eq!(lambda.sla, vec![0.0, 5.1]);
        assert_eq!(lambda.queue, 0.0);
        lambda.ascend(1.0, &[0.0, 5.0], 0.0, Some(8.0));
        assert_eq!(lambda.sla[1], 8.0);
    }
}
