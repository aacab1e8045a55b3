//! Step-size sequences of the three timescales.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `a(n) = a0 / n^a_exp` (multipliers), `b(n) = b0 / n^b_exp` (parameter),
/// `d(n) = min(1, d0 / n^d_exp)` (Lagrangian averages), with `n >= 1`.
///
/// The defaults satisfy the usual conditions: every sequence sums to
/// infinity, squares are summable (exponents above 1/2), and
/// `a(n)/b(n) -> 0`, `b(n)/d(n) -> 0` (`a_exp > b_exp > d_exp`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSizeSchedule {
    pub a0: f64,
    pub b0: f64,
    pub d0: f64,
    pub a_exp: f64,
    pub b_exp: f64,
    pub d_exp: f64,
}

impl Default for StepSizeSchedule {
    fn default() -> Self {
        Self { a0: 1.0, b0: 1.0, d0: 1.0, a_exp: 1.0, b_exp: 0.75, d_exp: 0.66 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("step-size constant {name} must be positive and finite, got {value}")]
    NonPositiveConstant { name: &'static str, value: f64 },
    #[error("step-size exponent {name} must lie in (0.5, 1], got {value}")]
    ExponentOutOfRange { name: &'static str, value: f64 },
    #[error("exponents must satisfy a_exp > b_exp > d_exp for separated timescales")]
    TimescalesNotSeparated,
}

impl StepSizeSchedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        for (name, value) in [("a0", self.a0), ("b0", self.b0), ("d0", self.d0)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScheduleError::NonPositiveConstant { name, value });
            }
        }
        for (name, value) in [("a_exp", self.a_exp), ("b_exp", self.b_exp), ("d_exp", self.d_exp)] {
            if !(value > 0.5 && value <= 1.0) {
                return Err(ScheduleError::ExponentOutOfRange { name, value });
            }
        }
        if !(self.a_exp > self.b_exp && self.b_exp > self.d_exp) {
            return Err(ScheduleError::TimescalesNotSeparated);
        }
        Ok(())
    }

    pub fn a(&self, n: u64) -> f64 {
        self.a0 / (n.max(1) as f64).powf(self.a_exp)
    }

    pub fn b(&self, n: u64) -> f64 {
        self.b0 / (n.max(1) as f64).powf(self.b_exp)
    }

    /// Capped at 1: it is an averaging weight, and a larger value would
    /// overshoot the sample.
    pub fn d(&self, n: u64) -> f64 {
        (self.d0 / (n.max(1) as f64).powf(self.d_exp)).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        StepSizeSchedule::default().validate().unwrap();
    }

    #[test]
    fn sequences_are_positive_and_decreasing() {
        let s = StepSizeSchedule::default();
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for n in 1..=10_000u64 {
            let cur = (s.a(n), s.b(n), s.d(n));
            assert!(cur.0 > 0.0 && cur.1 > 0.0 && cur.2 > 0.0);
            assert!(cur.0 < prev.0 && cur.1 < prev.1 && cur.2 < prev.2);
            prev = cur;
        }
    }

    #[test]
    fn ratios_vanish() {
        let s = StepSizeSchedule::default();
        let ratios = |n| (s.a(n) / s.b(n), s.b(n) / s.d(n));
        let (ab_1, bd_1) = ratios(10);
        let (ab, bd) = ratios(1_000_000);
        assert!(ab < 0.05 && ab < ab_1 / 10.0);
        assert!(bd < 0.3 && bd < bd_1 / 2.0);
    }

    #[test]
    fn rejects_bad_schedules() {
        let bad = StepSizeSchedule { b0: 0.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ScheduleError::NonPositiveConstant { name: "b0", .. })));
        let bad = StepSizeSchedule { d_exp: 0.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ScheduleError::ExponentOutOfRange { .. })));
        let bad = StepSizeSchedule { b_exp: 0.6, d_exp: 0.7, ..Default::default() };
        assert_eq!(bad.validate(), Err(ScheduleError::TimescalesNotSeparated));
    }
}
