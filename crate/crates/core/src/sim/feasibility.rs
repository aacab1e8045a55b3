//! Queue-growth feasibility test.

use serde::{Deserialize, Serialize};

/// Growth test over sliding windows of hourly queue-length samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthTest {
    pub window_hours: usize,
    /// Allowed relative growth; `10.0` means 1000%.
    pub max_growth: f64,
}

impl Default for GrowthTest {
    fn default() -> Self {
        Self { window_hours: 14 * 24, max_growth: 10.0 }
    }
}

impl GrowthTest {
    fn grew_too_much(&self, start: u32, end: u32) -> bool {
        end as f64 > (1.0 + self.max_growth) * start.max(1) as f64
    }

    /// `history[t][k]` is the length of complexity queue `k` at hour `t`.
    /// Returns `true` (q = 1) unless some queue, at the end of some window,
    /// exceeds `(1 + max_growth)` times its length at the window start
    /// (floored at 1). Histories shorter than one window are judged on their
    /// full span.
    pub fn is_feasible(&self, history: &[Vec<u32>]) -> bool {
        if history.len() < 2 {
            return true;
        }
        let span = self.window_hours.min(history.len() - 1);
        !history
            .iter()
            .zip(history.iter().skip(span))
            .any(|(start, end)| start.iter().zip(end).any(|(&s, &e)| self.grew_too_much(s, e)))
    }
}

/// Queue-feasibility indicator with the default two-week, 1000% rule.
pub fn queue_feasibility(history: &[Vec<u32>]) -> bool {
    GrowthTest::default().is_feasible(history)
}
