//! Reporting metrics.

use crate::sim::SimOutcome;

/// Workload-weighted utilization across skill levels.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationSummary {
    /// `100 · Σ_k share_k · u_k`.
    pub percent: f64,
    pub per_skill: Vec<f64>,
    /// Skills with positive workload share but no staffed time; their
    /// utilization counts as zero.
    pub unstaffed_skills: Vec<usize>,
}

/// Utilization per skill is total busy time over total staffed time across
/// the shifts (cells are shift-major: `cell = shift · n_skills + skill`).
pub fn mean_utilization(busy_minutes: &[f64], staffed_minutes: &[f64], n_skills: usize, shares: &[f64]) -> UtilizationSummary {
    let mut busy = vec![0.0; n_skills];
    let mut staffed = vec![0.0; n_skills];
    for (cell, (b, s)) in busy_minutes.iter().zip(staffed_minutes).enumerate() {
        busy[cell % n_skills] += b;
        staffed[cell % n_skills] += s;
    }
    let mut unstaffed_skills = Vec::new();
    let per_skill: Vec<f64> = (0..n_skills)
        .map(|k| {
            if staffed[k] > 0.0 {
                (busy[k] / staffed[k]).clamp(0.0, 1.0)
            } else {
                if shares[k] > 0.0 {
                    unstaffed_skills.push(k);
                }
                0.0
            }
        })
        .collect();
    UtilizationSummary { percent: 100.0 * weighted_utilization(shares, &per_skill), per_skill, unstaffed_skills }
}

/// `Σ share_k · u_k`.
pub fn weighted_utilization(shares: &[f64], utilization: &[f64]) -> f64 {
    shares.iter().zip(utilization).map(|(s, u)| s * u).sum()
}

/// [`mean_utilization`] over the pooled busy and staffed time of several
/// replications.
pub fn pooled_utilization(outcomes: &[SimOutcome], n_skills: usize, shares: &[f64]) -> UtilizationSummary {
    let n_cells = outcomes.first().map_or(0, |o| o.busy_minutes.len());
    let mut busy = vec![0.0; n_cells];
    let mut staffed = vec![0.0; n_cells];
    for o in outcomes {
        for c in 0..n_cells {
            busy[c] += o.busy_minutes[c];
            staffed[c] += o.staffed_minutes[c];
        }
    }
    mean_utilization(&busy, &staffed, n_skills, shares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn saturated_system_is_fully_utilized() {
        let s = mean_utilization(&[60.0, 30.0], &[60.0, 30.0], 2, &[0.5, 0.5]);
        assert_abs_diff_eq!(s.percent, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn weighted_mean_example() {
        assert_abs_diff_eq!(100.0 * weighted_utilization(&[0.4, 0.3, 0.3], &[0.5, 1.0, 0.0]), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn single_skill_equals_its_utilization() {
        // two shifts, one skill
        let s = mean_utilization(&[30.0, 10.0], &[60.0, 20.0], 1, &[1.0]);
        assert_abs_diff_eq!(s.percent, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn unstaffed_skill_is_flagged() {
        let s = mean_utilization(&[30.0, 0.0], &[60.0, 0.0], 2, &[0.6, 0.4]);
        assert_eq!(s.unstaffed_skills, vec![1]);
        assert_abs_diff_eq!(s.percent, 30.0, epsilon = 1e-12);
    }
}
