//! Per-core energy model and decision reward.
//!
//! A busy virtual core costs a fixed active share plus a usage-proportional
//! share. An idle core still burns a reduced amount if its SMT sibling keeps
//! the physical CPU awake, and only a floor cost if the whole CPU sleeps.
//! The reward is the negated mean core cost when every vBS gets its traffic
//! served, and -1 the moment any downlink or uplink demand is violated.

use crate::env::EnvOutcome;
use crate::scalar::Real;
use crate::topology::GppTopology;
use serde::{Deserialize, Serialize};

/// Served throughput may fall short of demand by this relative tolerance and
/// still count as meeting it; absorbs rounding inside the simulator.
pub const DEMAND_MET_REL_TOL: f64 = 1.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams<F> {
    /// Fixed cost of a busy core.
    pub alpha1: F,
    /// Cost of an idle core whose sibling keeps the physical CPU awake.
    pub alpha2: F,
    /// Cost of an idle core on a fully idle physical CPU.
    pub alpha3: F,
    /// Usage-proportional cost of a busy core.
    pub beta: F,
}

impl<F: Real> Default for EnergyParams<F> {
    fn default() -> Self {
        Self {
            alpha1: F::of_f64(0.4),
            alpha2: F::of_f64(0.2),
            alpha3: F::of_f64(0.05),
            beta: F::of_f64(0.6),
        }
    }
}

impl<F: Real> EnergyParams<F> {
    /// Orderings the model relies on: busy > sibling-idle > deep-idle, and a
    /// fully used core costs at most 1.
    pub fn validate(&self) -> bool {
        self.alpha3 >= F::zero()
            && self.alpha2 > self.alpha3
            && self.alpha1 > self.alpha2
            && self.beta > F::zero()
            && self.alpha1 + self.beta <= F::one()
    }
}

/// Energy cost of one virtual core given its usage and its sibling's usage.
pub fn core_cost<F: Real>(usage: F, sibling_usage: F, p: &EnergyParams<F>) -> F {
    if usage > F::zero() {
        p.alpha1 + p.beta * usage
    } else if sibling_usage > F::zero() {
        p.alpha2
    } else {
        p.alpha3
    }
}

/// Mean per-core energy cost of an interval, independent of whether demand
/// was met.
pub fn mean_core_cost<F: Real>(
    outcome: &EnvOutcome<F>,
    p: &EnergyParams<F>,
    topo: &GppTopology,
) -> F {
    let n_virtual = topo.n_virtual();
    debug_assert_eq!(outcome.usage.len(), n_virtual);
    let mut total = F::zero();
    for j in 0..n_virtual {
        total += core_cost(outcome.usage[j], outcome.usage[topo.sibling(j)], p);
    }
    total / F::of_usize(n_virtual)
}

/// Decision reward for one interval: -1 if any vBS missed its downlink or
/// uplink demand, otherwise the negated mean per-core energy cost.
pub fn reward<F: Real>(outcome: &EnvOutcome<F>, p: &EnergyParams<F>, topo: &GppTopology) -> F {
    let violated = outcome
        .demand_met_dl
        .iter()
        .chain(outcome.demand_met_ul.iter())
        .any(|met| !met);
    if violated {
        return -F::one();
    }
    -mean_core_cost(outcome, p, topo)
}
