//! Non-learning allocation policies the agent is compared against: a
//! contention-oblivious sizing rule and exhaustive reward oracles.

use crate::context::VbsContext;
use crate::energy::{reward, EnergyParams};
use crate::env::{self, EnvOutcome, EnvParams};
use crate::error::{CoreError, Result};
use crate::scalar::Real;
use crate::topology::{enumerate_activation_vectors, rho, ActivationVector, GppTopology};

/// Sizes the core count by summing per-vBS demand as if every instance ran
/// isolated at full per-core capacity, then dividing by core capacity and
/// rounding up. Ignores contention entirely, which is precisely how it
/// under-allocates under load.
pub fn sira_allocate<F: Real>(
    contexts: &[VbsContext<F>],
    topo: &GppTopology,
    p: &EnvParams<F>,
) -> Result<usize> {
    if contexts.is_empty() {
        return Err(CoreError::EmptyEpisode);
    }
    let mut total = F::zero();
    for ctx in contexts {
        total += env::base_cpu_demand(ctx, p)?;
    }
    let cores = (total / p.per_core_capacity).ceil().as_f64() as usize;
    Ok(cores.clamp(1, topo.max_action()))
}

/// What an exhaustive policy decided and what the platform did under it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDecision<F> {
    pub action: usize,
    pub vector: ActivationVector,
    pub reward: F,
    pub outcome: EnvOutcome<F>,
}

/// Best core count under the packed placement rule: evaluates every action
/// `1..=2N` on the same episode and keeps the highest reward, preferring
/// fewer cores on ties. Deterministic given the noise seed.
pub fn oracle_allocate<F: Real>(
    contexts: &[VbsContext<F>],
    topo: &GppTopology,
    envp: &EnvParams<F>,
    energyp: &EnergyParams<F>,
    noise_seed: u64,
) -> Result<OracleDecision<F>> {
    let mut best: Option<OracleDecision<F>> = None;
    for a in 1..=topo.max_action() {
        let v = rho(topo, a)?;
        let outcome = env::step(contexts, &v, topo, envp, noise_seed)?;
        let r = reward(&outcome, energyp, topo);
        let better = match &best {
            None => true,
            Some(b) => r > b.reward,
        };
        if better {
            best = Some(OracleDecision {
                action: a,
                vector: v,
                reward: r,
                outcome,
            });
        }
    }
    Ok(best.expect("action space is non-empty"))
}

/// Best activation vector over the whole lattice, not only packed ones.
/// Exponential in the core count, so gated to small topologies; used as a
/// diagnostic upper bound on [`oracle_allocate`].
pub fn full_oracle_allocate<F: Real>(
    contexts: &[VbsContext<F>],
    topo: &GppTopology,
    envp: &EnvParams<F>,
    energyp: &EnergyParams<F>,
    noise_seed: u64,
) -> Result<OracleDecision<F>> {
    const MAX_PHYSICAL: usize = 3;
    if topo.n_physical() > MAX_PHYSICAL {
        return Err(CoreError::TooLarge {
            what: "exhaustive activation-vector search",
            max: MAX_PHYSICAL,
            got: topo.n_physical(),
        });
    }
    let mut best: Option<OracleDecision<F>> = None;
    for a in 1..=topo.max_action() {
        for v in enumerate_activation_vectors(topo, a)? {
            let outcome = env::step(contexts, &v, topo, envp, noise_seed)?;
            let r = reward(&outcome, energyp, topo);
            let better = match &best {
                None => true,
                Some(b) => r > b.reward,
            };
            if better {
                best = Some(OracleDecision {
                    action: a,
                    vector: v,
                    reward: r,
                    outcome,
                });
            }
        }
    }
    Ok(best.expect("action space is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{gen_random_context, ContextRanges};

    fn setup() -> (GppTopology, EnvParams<f64>, EnergyParams<f64>) {
        (
            GppTopology::new(2),
            EnvParams::default(),
            EnergyParams::default(),
        )
    }

    fn quiet_context() -> VbsContext<f64> {
        VbsContext::from_demand(0.1, 15, 0.1, 23.0, 50).unwrap()
    }

    /// Max demand on the worst in-range channel: the heaviest single vBS the
    /// default ranges can produce.
    fn heavy_context() -> VbsContext<f64> {
        VbsContext::from_demand(12.0, 7, 10.0, 6.0, 50).unwrap()
    }

    #[test]
    fn sizes_one_core_for_a_quiet_cell() {
        let (topo, envp, _) = setup();
        assert_eq!(sira_allocate(&[quiet_context()], &topo, &envp).unwrap(), 1);
        assert!(sira_allocate::<f64>(&[], &topo, &envp).is_err());
    }

    #[test]
    fn sizing_ignores_contention_parameters() {
        let (topo, mut envp, _) = setup();
        let ctxs = vec![heavy_context(); 3];
        let before = sira_allocate(&ctxs, &topo, &envp).unwrap();
        envp.contention.seccomp_tax = 0.2;
        envp.contention.ctxswitch_tax_at_full = 0.5;
        envp.contention.ipc_anchors = vec![(1, 2.0), (2, 1.0), (5, 0.25)];
        let after = sira_allocate(&ctxs, &topo, &envp).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn oracle_powers_one_core_when_everything_fits() {
        let (topo, envp, energyp) = setup();
        let d = oracle_allocate(&[quiet_context()], &topo, &envp, &energyp, 7).unwrap();
        assert_eq!(d.action, 1);
        assert!(d.outcome.demand_met_dl.iter().all(|&m| m));
    }

    #[test]
    fn oracle_powers_everything_when_only_the_full_complex_fits() {
        let (topo, envp, energyp) = setup();
        let ctxs = vec![heavy_context(); 4];
        let d = oracle_allocate(&ctxs, &topo, &envp, &energyp, 3).unwrap();
        assert_eq!(d.action, 4, "reward {},", d.reward);
        assert!(d.reward > -1.0, "full complex must satisfy demand");
        // The contention-oblivious rule sizes far below that.
        let sira = sira_allocate(&ctxs, &topo, &envp).unwrap();
        assert!(sira <= 2, "sira sized {sira}");
        let v = rho(&topo, sira).unwrap();
        let out = env::step(&ctxs, &v, &topo, &envp, 3).unwrap();
        assert_eq!(reward(&out, &energyp, &topo), -1.0, "sira must violate");
    }

    #[test]
    fn unpacked_vectors_never_lose_to_packed_ones() {
        let (topo, envp, energyp) = setup();
        let ranges = ContextRanges::default();
        let mut strict = 0;
        for seed in 0..60 {
            let n = 1 + (seed as usize % 4);
            let ctxs = gen_random_context::<f64>(n, &ranges, 9000 + seed).unwrap();
            let packed = oracle_allocate(&ctxs, &topo, &envp, &energyp, seed).unwrap();
            let full = full_oracle_allocate(&ctxs, &topo, &envp, &energyp, seed).unwrap();
            assert!(
                full.reward >= packed.reward,
                "seed {seed}: full {} < packed {}",
                full.reward,
                packed.reward
            );
            if full.reward > packed.reward {
                strict += 1;
            }
        }
        println!("full oracle strictly better on {strict}/60 episodes");
    }

    #[test]
    fn exhaustive_vector_search_is_gated_to_small_topologies() {
        let topo = GppTopology::new(4);
        let envp = EnvParams::<f64>::default();
        let energyp = EnergyParams::default();
        let err = full_oracle_allocate(&[quiet_context()], &topo, &envp, &energyp, 1).unwrap_err();
        assert!(matches!(err, CoreError::TooLarge { .. }), "{err}");
    }
}
