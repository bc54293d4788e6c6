//! Monte-Carlo estimates with two-sided Hoeffding radii.

use serde::{Deserialize, Serialize};

/// Failure probability of every reported confidence interval.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// `sqrt(ln(2 / delta) / (2 n))`; infinite for zero trials.
pub fn hoeffding_radius(trials: u64, delta: f64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    ((2.0 / delta).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub value: f64,
    pub radius: f64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials);
        let value = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Self { successes, trials, value, radius: hoeffding_radius(trials, DEFAULT_DELTA) }
    }
}
