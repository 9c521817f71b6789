//! Exploration schedule.

use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Exponentially decaying exploration rate with a floor:
/// `eps(t) = eps_min + (1 - eps_min) * exp(-t / decay)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule<F> {
    pub eps_min: F,
    /// Decay constant in decision steps; conventionally 60% of the training
    /// set size.
    pub decay: F,
}

impl<F: Real> EpsilonSchedule<F> {
    pub fn new(eps_min: F, decay: F) -> Self {
        assert!(
            eps_min >= F::zero() && eps_min < F::one() && decay > F::zero(),
            "epsilon floor must lie in [0, 1) and decay must be positive"
        );
        Self { eps_min, decay }
    }

    pub fn value(&self, step: u64) -> F {
        let t = F::of_f64(step as f64);
        self.eps_min + (F::one() - self.eps_min) * (-t / self.decay).exp()
    }
}
