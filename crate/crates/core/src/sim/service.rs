//! Truncated lognormal service times: `min(exp(M), cap)` with `M ~ N(mu, sigma^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedLogNormal {
    pub mu: f64,
    pub sigma: f64,
    pub cap: f64,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

impl TruncatedLogNormal {
    pub fn new(mu: f64, sigma: f64, cap: f64) -> Self {
        Self { mu, sigma, cap }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_service_time(self.mu, self.sigma, self.cap, rng)
    }

    /// `E[min(exp(M), cap)]` in closed form.
    pub fn mean(&self) -> f64 {
        let (mu, s, cap) = (self.mu, self.sigma, self.cap);
        if s == 0.0 {
            return mu.exp().min(cap);
        }
        let lc = cap.ln();
        let below = (mu + 0.5 * s * s).exp() * std_normal_cdf((lc - mu - s * s) / s);
        let above = cap * (1.0 - std_normal_cdf((lc - mu) / s));
        below + above
    }
}

/// Draws one service time in minutes.
pub fn sample_service_time<R: Rng + ?Sized>(mu: f64, sigma: f64, cap: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (mu + sigma * z).exp().min(cap)
}
