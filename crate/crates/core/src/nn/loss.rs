//! Robust regression loss and the bootstrap target.

use crate::scalar::Real;

/// Smooth L1: quadratic inside the unit interval, linear outside, continuous
/// at the seam.
pub fn smooth_l1<F: Real>(x: F) -> F {
    let half = F::of_f64(0.5);
    if x.abs() < F::one() {
        half * x * x
    } else {
        x.abs() - half
    }
}

/// Derivative of [`smooth_l1`].
pub fn smooth_l1_grad<F: Real>(x: F) -> F {
    if x.abs() < F::one() {
        x
    } else {
        x.signum()
    }
}

/// One-step bootstrap target `r + gamma * max_a' Q'`. With `gamma = 0` the
/// problem is a contextual bandit and the target reduces to the reward.
pub fn td_target<F: Real>(reward: F, next_q_max: F, gamma: F) -> F {
    reward + gamma * next_q_max
}
