//! Episode construction and policy evaluation shared by the commands.

use crate::util::mix64;
use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vransim_core::context::VbsContext;
use vransim_core::energy::{mean_core_cost, reward, EnergyParams};
use vransim_core::env::{step, EnvParams};
use vransim_core::scalar::Real;
use vransim_core::topology::{rho, GppTopology};

/// What one policy's action did on one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEval<F> {
    pub action: usize,
    pub reward: F,
    /// Every vBS met demand in both directions.
    pub met: bool,
    /// Mean per-core energy cost, defined even on violations.
    pub cost: F,
}

pub fn eval_action<F: Real>(
    contexts: &[VbsContext<F>],
    action: usize,
    topo: &GppTopology,
    envp: &EnvParams<F>,
    energyp: &EnergyParams<F>,
    noise_seed: u64,
) -> Result<PolicyEval<F>> {
    let v = rho(topo, action)?;
    let out = step(contexts, &v, topo, envp, noise_seed)?;
    let met = out
        .demand_met_dl
        .iter()
        .chain(out.demand_met_ul.iter())
        .all(|&m| m);
    Ok(PolicyEval {
        action,
        reward: reward(&out, energyp, topo),
        met,
        cost: mean_core_cost(&out, energyp, topo),
    })
}

/// Per-episode vBS count, a pure function of the episode seed.
pub fn episode_n(ep_seed: u64, n_min: usize, n_max: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(ep_seed ^ 0x6e5f_c3a1));
    rng.gen_range(n_min..=n_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use vransim_core::context::gen_random_context;

    #[test]
    fn episode_counts_cover_the_range_deterministically() {
        let mut seen = [false; 5];
        for i in 0..200u64 {
            let n = episode_n(i, 1, 4);
            assert!((1..=4).contains(&n));
            seen[n] = true;
            assert_eq!(n, episode_n(i, 1, 4));
        }
        assert!(seen[1] && seen[2] && seen[3] && seen[4]);
    }

    #[test]
    fn violated_episodes_still_report_energy_cost() {
        let cfg = ExperimentConfig::default();
        let topo = cfg.topology();
        let envp = cfg.env_params::<f64>();
        let energyp = cfg.energy_params::<f64>();
        let ranges = cfg.context_ranges::<f64>();
        // Four max-demand instances on one core must violate.
        let ctx: Vec<_> = (0..4)
            .map(|_| {
                VbsContext::from_demand(
                    ranges.d_dl_max_mbps,
                    ranges.cqi_dl_min,
                    ranges.d_ul_max_mbps,
                    ranges.snr_ul_min_db,
                    ranges.prb_total,
                )
                .unwrap()
            })
            .collect();
        let ev = eval_action(&ctx, 1, &topo, &envp, &energyp, 5).unwrap();
        assert!(!ev.met);
        assert_eq!(ev.reward, -1.0);
        assert!(ev.cost > 0.0 && ev.cost < 1.0);
        // A feasible episode's cost is the negated reward.
        let quiet = gen_random_context::<f64>(1, &ranges, 3).unwrap();
        let ev = eval_action(&quiet, 4, &topo, &envp, &energyp, 5).unwrap();
        assert!(ev.met);
        assert_eq!(ev.cost, -ev.reward);
    }
}
