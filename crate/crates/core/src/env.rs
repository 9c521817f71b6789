//! Shared-platform environment: isolated CPU demand per vBS, the
//! noisy-neighbor slowdown that inflates it, and the service outcome of
//! running a context set on a given activation vector.
//!
//! The slowdown model composes three measured effects, each normalized so a
//! single instance sees exactly 1.0:
//!
//! * instructions-per-cycle degradation, piecewise linear through anchor
//!   points and flat beyond the last one,
//! * a per-instance syscall-filter tax,
//! * a context-switch tax that ramps up as instances approach the number of
//!   powered cores.
//!
//! Throughput does not degrade gracefully: once compute capacity falls below
//! effective demand, service collapses along a configurable linear cliff.

use crate::context::VbsContext;
use crate::energy::DEMAND_MET_REL_TOL;
use crate::error::{CoreError, Result};
use crate::radio::{self, Direction};
use crate::scalar::Real;
use crate::topology::{ActivationVector, GppTopology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentionParams<F> {
    /// Instructions-per-cycle at selected instance counts, ascending in the
    /// count and starting at 1 instance.
    pub ipc_anchors: Vec<(u32, F)>,
    /// Extra CPU time per co-located instance from syscall filtering.
    pub seccomp_tax: F,
    /// Context-switch overhead once instances fill the powered cores.
    pub ctxswitch_tax_at_full: F,
}

impl<F: Real> Default for ContentionParams<F> {
    fn default() -> Self {
        Self {
            ipc_anchors: vec![
                (1, F::of_f64(1.25)),
                (2, F::of_f64(1.0)),
                (5, F::of_f64(0.6)),
            ],
            seccomp_tax: F::of_f64(0.014),
            ctxswitch_tax_at_full: F::of_f64(0.08),
        }
    }
}

impl<F: Real> ContentionParams<F> {
    pub fn validate(&self) -> Result<()> {
        if self.ipc_anchors.is_empty() || self.ipc_anchors[0].0 != 1 {
            return Err(CoreError::InvalidContext(
                "IPC anchors must start at 1 instance".into(),
            ));
        }
        for w in self.ipc_anchors.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(CoreError::InvalidContext(
                    "IPC anchor counts must be ascending".into(),
                ));
            }
        }
        if self.ipc_anchors.iter().any(|&(_, v)| v <= F::zero()) {
            return Err(CoreError::InvalidContext("IPC must be positive".into()));
        }
        if self.seccomp_tax < F::zero() || self.ctxswitch_tax_at_full < F::zero() {
            return Err(CoreError::InvalidContext(
                "taxes must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// IPC at `n` instances: linear between anchors, flat beyond the last.
    fn ipc(&self, n: usize) -> F {
        let n = F::of_usize(n.max(1));
        let anchors = &self.ipc_anchors;
        let first = anchors[0];
        if n <= F::of_usize(first.0 as usize) {
            return first.1;
        }
        for w in anchors.windows(2) {
            let (n0, v0) = (F::of_usize(w[0].0 as usize), w[0].1);
            let (n1, v1) = (F::of_usize(w[1].0 as usize), w[1].1);
            if n <= n1 {
                return v0 + (v1 - v0) * (n - n0) / (n1 - n0);
            }
        }
        anchors.last().unwrap().1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvParams<F> {
    pub prb_total: u32,
    /// Isolated CPU share of an attached vBS with no traffic.
    pub base_idle_cpu: F,
    /// CPU weight of a fully loaded downlink.
    pub dl_cpu_weight: F,
    /// CPU weight of a fully loaded uplink; decoding outweighs encoding.
    pub ul_cpu_weight: F,
    /// How strongly higher-order modulation inflates per-RB processing cost.
    pub mcs_cost_gain: F,
    /// Upper bound on one vBS's isolated CPU share.
    pub per_vbs_cpu_cap: F,
    /// CPU seconds per second one virtual core delivers with its sibling
    /// idle.
    pub per_core_capacity: F,
    /// Combined throughput of a physical CPU with both siblings busy,
    /// relative to one busy sibling.
    pub smt_throughput_factor: F,
    /// Slope of the service cliff once capacity falls below demand.
    pub collapse_sharpness: F,
    /// Multiplicative Gaussian noise applied to reported core usage.
    pub usage_noise_sigma: F,
    pub contention: ContentionParams<F>,
}

impl<F: Real> Default for EnvParams<F> {
    fn default() -> Self {
        Self {
            prb_total: radio::PRB_10MHZ,
            base_idle_cpu: F::of_f64(0.08),
            dl_cpu_weight: F::of_f64(0.08),
            ul_cpu_weight: F::of_f64(0.12),
            mcs_cost_gain: F::of_f64(1.0),
            per_vbs_cpu_cap: F::of_f64(0.35),
            per_core_capacity: F::of_f64(1.0),
            smt_throughput_factor: F::of_f64(1.25),
            collapse_sharpness: F::of_f64(2.5),
            usage_noise_sigma: F::of_f64(0.02),
            contention: ContentionParams::default(),
        }
    }
}

impl<F: Real> EnvParams<F> {
    pub fn validate(&self) -> Result<()> {
        self.contention.validate()?;
        let pos = [
            self.base_idle_cpu,
            self.dl_cpu_weight,
            self.ul_cpu_weight,
            self.per_vbs_cpu_cap,
            self.per_core_capacity,
            self.collapse_sharpness,
        ];
        if pos.iter().any(|v| *v <= F::zero()) {
            return Err(CoreError::InvalidContext(
                "demand and capacity parameters must be positive".into(),
            ));
        }
        if self.ul_cpu_weight <= self.dl_cpu_weight {
            return Err(CoreError::InvalidContext(
                "uplink CPU weight must exceed downlink".into(),
            ));
        }
        if self.smt_throughput_factor < F::one() || self.smt_throughput_factor > F::of_f64(2.0) {
            return Err(CoreError::InvalidContext(
                "SMT factor must lie in [1, 2]".into(),
            ));
        }
        if self.usage_noise_sigma < F::zero() || self.mcs_cost_gain < F::zero() {
            return Err(CoreError::InvalidContext(
                "noise and MCS gain must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one decision interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvOutcome<F> {
    /// Served downlink throughput per vBS, Mbps.
    pub tput_dl_mbps: Vec<F>,
    /// Served uplink throughput per vBS, Mbps.
    pub tput_ul_mbps: Vec<F>,
    pub demand_met_dl: Vec<bool>,
    pub demand_met_ul: Vec<bool>,
    /// Relative usage of every virtual core, zero outside the activation
    /// vector.
    pub usage: Vec<F>,
    /// Aggregate CPU demand after the contention slowdown.
    pub effective_demand: F,
    /// CPU capacity of the activation vector.
    pub capacity: F,
}

/// Isolated CPU share one vBS needs: idle floor plus per-direction load that
/// grows with resource blocks and with modulation order, clamped to the
/// per-vBS cap.
pub fn base_cpu_demand<F: Real>(ctx: &VbsContext<F>, p: &EnvParams<F>) -> Result<F> {
    let prb = F::of_usize(p.prb_total as usize);
    let eff_max = radio::spectral_efficiency::<F>(radio::CQI_MAX)?;
    let eff_dl = radio::efficiency_for(F::of_usize(ctx.cqi_dl as usize), Direction::Downlink)?;
    let eff_ul = radio::efficiency_for(ctx.snr_ul_db, Direction::Uplink)?;
    let mcs = |eff: F| F::one() + p.mcs_cost_gain * eff / eff_max;
    let demand = p.base_idle_cpu
        + p.dl_cpu_weight * (ctx.p_dl / prb) * mcs(eff_dl)
        + p.ul_cpu_weight * (ctx.p_ul / prb) * mcs(eff_ul);
    Ok(demand.min(p.per_vbs_cpu_cap))
}

/// Multiplier on aggregate isolated demand when `n_vbs` instances share
/// `powered_cores` virtual cores. Exactly 1 for a single instance.
pub fn contention_slowdown<F: Real>(
    n_vbs: usize,
    powered_cores: usize,
    p: &ContentionParams<F>,
) -> F {
    if n_vbs <= 1 {
        return F::one();
    }
    let one = F::one();
    let n = F::of_usize(n_vbs);
    let ipc_ratio = p.ipc(1) / p.ipc(n_vbs);
    let seccomp = (one + p.seccomp_tax * n) / (one + p.seccomp_tax);
    let denom = F::of_usize(powered_cores.saturating_sub(1).max(1));
    let ramp = ((n - one) / denom).min(one);
    let ctxswitch = one + p.ctxswitch_tax_at_full * ramp;
    ipc_ratio * seccomp * ctxswitch
}

/// CPU capacity one virtual core contributes inside `v`: full capacity when
/// its sibling sleeps, an equal share of the SMT-limited pair otherwise.
pub fn core_capacity_share<F: Real>(
    j: usize,
    v: &ActivationVector,
    topo: &GppTopology,
    p: &EnvParams<F>,
) -> F {
    if !v.contains(j) {
        return F::zero();
    }
    if v.contains(topo.sibling(j)) {
        p.smt_throughput_factor * p.per_core_capacity / F::of_f64(2.0)
    } else {
        p.per_core_capacity
    }
}

/// Total CPU capacity of an activation vector.
pub fn capacity_of<F: Real>(v: &ActivationVector, topo: &GppTopology, p: &EnvParams<F>) -> F {
    v.cores()
        .iter()
        .map(|&j| core_capacity_share(j, v, topo, p))
        .fold(F::zero(), |a, b| a + b)
}

/// Runs one decision interval: the context set executes on the powered cores
/// and the platform reports served throughput and per-core usage. Pure
/// function of its inputs and the noise seed.
pub fn step<F: Real>(
    contexts: &[VbsContext<F>],
    v: &ActivationVector,
    topo: &GppTopology,
    p: &EnvParams<F>,
    noise_seed: u64,
) -> Result<EnvOutcome<F>> {
    if contexts.is_empty() {
        return Err(CoreError::EmptyEpisode);
    }
    let one = F::one();
    let zero = F::zero();

    let mut aggregate = zero;
    for ctx in contexts {
        aggregate += base_cpu_demand(ctx, p)?;
    }
    let slowdown = contention_slowdown(contexts.len(), v.cardinality(), &p.contention);
    let effective_demand = aggregate * slowdown;
    let capacity = capacity_of(v, topo, p);

    let phi = if effective_demand > zero {
        (capacity / effective_demand).min(one)
    } else {
        one
    };
    // Service cliff: proportional loss amplified by the collapse slope.
    let serve_frac = if phi >= one {
        one
    } else {
        (one - p.collapse_sharpness * (one - phi)).max(zero)
    };

    let tol = F::of_f64(1.0 - DEMAND_MET_REL_TOL);
    let n = contexts.len();
    let mut tput_dl = Vec::with_capacity(n);
    let mut tput_ul = Vec::with_capacity(n);
    let mut met_dl = Vec::with_capacity(n);
    let mut met_ul = Vec::with_capacity(n);
    for ctx in contexts {
        let cap_dl = radio::link_capacity_mbps(
            F::of_usize(ctx.cqi_dl as usize),
            Direction::Downlink,
            p.prb_total,
        )?;
        let cap_ul = radio::link_capacity_mbps(ctx.snr_ul_db, Direction::Uplink, p.prb_total)?;
        let dl = ctx.d_dl_mbps.min(cap_dl) * serve_frac;
        let ul = ctx.d_ul_mbps.min(cap_ul) * serve_frac;
        met_dl.push(dl >= ctx.d_dl_mbps * tol);
        met_ul.push(ul >= ctx.d_ul_mbps * tol);
        tput_dl.push(dl);
        tput_ul.push(ul);
    }

    // Fair scheduler abstraction: every powered core runs at the same
    // fraction of its capacity share, perturbed by measurement noise.
    let used = effective_demand.min(capacity);
    let fraction = if capacity > zero {
        used / capacity
    } else {
        zero
    };
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut usage = vec![zero; topo.n_virtual()];
    for &j in v.cores() {
        let noisy = fraction * (one + p.usage_noise_sigma * F::of_f64(gaussian(&mut rng)));
        usage[j] = noisy.max(zero).min(one);
    }

    Ok(EnvOutcome {
        tput_dl_mbps: tput_dl,
        tput_ul_mbps: tput_ul,
        demand_met_dl: met_dl,
        demand_met_ul: met_ul,
        usage,
        effective_demand,
        capacity,
    })
}

/// Standard normal draw via Box-Muller; avoids pulling in a distributions
/// crate for one sampler.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1.0e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{gen_random_context, ContextRanges};
    use crate::topology::rho;

    fn ctx(d_dl: f64, cqi: u8, d_ul: f64, snr: f64) -> VbsContext<f64> {
        VbsContext::from_demand(d_dl, cqi, d_ul, snr, 50).unwrap()
    }

    fn no_tax() -> ContentionParams<f64> {
        ContentionParams {
            seccomp_tax: 0.0,
            ctxswitch_tax_at_full: 0.0,
            ..ContentionParams::default()
        }
    }

    #[test]
    fn single_instance_sees_no_slowdown() {
        let p = ContentionParams::<f64>::default();
        assert_eq!(contention_slowdown(1, 1, &p), 1.0);
        assert_eq!(contention_slowdown(1, 4, &p), 1.0);
    }

    #[test]
    fn five_instances_match_the_ipc_anchor_ratio_before_taxes() {
        let s = contention_slowdown(5, 2, &no_tax());
        assert!((s - 1.25 / 0.6).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn slowdown_interpolates_between_anchors() {
        let s3 = contention_slowdown(3, 2, &no_tax());
        let ipc3 = 1.0 - 0.4 / 3.0;
        assert!((s3 - 1.25 / ipc3).abs() < 1e-12);
        let s4 = contention_slowdown(4, 2, &no_tax());
        let ipc4 = 1.0 - 0.8 / 3.0;
        assert!((s4 - 1.25 / ipc4).abs() < 1e-12);
    }

    #[test]
    fn slowdown_is_monotone_and_flat_beyond_last_anchor() {
        let p = ContentionParams::<f64>::default();
        let mut prev = 0.0;
        for n in 1..=8 {
            let s = contention_slowdown(n, 2, &p);
            assert!(s >= prev, "slowdown must not decrease with instances");
            prev = s;
        }
        // With the core-count ramp saturated, only the flat IPC tail remains.
        let s5 = contention_slowdown(5, 2, &p);
        let s8 = contention_slowdown(8, 2, &p);
        let ipc_flat = |n: f64| (1.25 / 0.6) * ((1.0 + 0.014 * n) / 1.014) * 1.08;
        assert!((s5 - ipc_flat(5.0)).abs() < 1e-12);
        assert!((s8 - ipc_flat(8.0)).abs() < 1e-12);
    }

    #[test]
    fn more_powered_cores_never_increase_the_slowdown() {
        let p = ContentionParams::<f64>::default();
        for n in 2..=5 {
            let mut prev = f64::INFINITY;
            for cores in 1..=6 {
                let s = contention_slowdown(n, cores, &p);
                assert!(s <= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn idle_vbs_costs_the_idle_floor() {
        let p = EnvParams::<f64>::default();
        let c = ctx(0.0, 9, 0.0, 12.0);
        assert_eq!(base_cpu_demand(&c, &p).unwrap(), p.base_idle_cpu);
    }

    #[test]
    fn demand_grows_with_load() {
        let p = EnvParams::<f64>::default();
        let lo = base_cpu_demand(&ctx(4.0, 9, 2.0, 12.0), &p).unwrap();
        let hi = base_cpu_demand(&ctx(8.0, 9, 4.0, 12.0), &p).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn uplink_costs_more_cpu_than_downlink_at_equal_load() {
        let p = EnvParams::<f64>::default();
        // 10.3 dB is the CQI 9 threshold, so both directions use the same
        // modulation and resource blocks.
        let dl_only = base_cpu_demand(&ctx(8.0, 9, 0.0, 10.3), &p).unwrap();
        let ul_only = base_cpu_demand(&ctx(0.0, 9, 8.0, 10.3), &p).unwrap();
        assert!(ul_only > dl_only, "{ul_only} <= {dl_only}");
    }

    #[test]
    fn per_vbs_cap_bounds_demand() {
        let p = EnvParams::<f64> {
            per_vbs_cpu_cap: 0.1,
            ..EnvParams::default()
        };
        let d = base_cpu_demand(&ctx(12.0, 7, 10.0, 6.0), &p).unwrap();
        assert_eq!(d, 0.1);
    }

    #[test]
    fn capacity_counts_smt_pairs_once() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        let cap = |cores: Vec<usize>| {
            capacity_of(&ActivationVector::new(cores, &topo).unwrap(), &topo, &p)
        };
        assert_eq!(cap(vec![0]), 1.0);
        assert_eq!(cap(vec![0, 2]), 1.25);
        assert_eq!(cap(vec![0, 1]), 2.0);
        assert_eq!(cap(vec![0, 1, 2]), 2.25);
        assert_eq!(cap(vec![0, 1, 2, 3]), 2.5);
    }

    #[test]
    fn light_load_on_all_cores_is_served_easily() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        let v = rho(&topo, 4).unwrap();
        let out = step(&[ctx(1.0, 12, 0.5, 15.0)], &v, &topo, &p, 3).unwrap();
        assert!(out.demand_met_dl[0] && out.demand_met_ul[0]);
        assert!(out.usage.iter().all(|&u| u < 0.2));
        assert_eq!(out.tput_dl_mbps[0], 1.0);
    }

    #[test]
    fn halving_capacity_collapses_throughput_to_zero() {
        let topo = GppTopology::new(2);
        let c = ctx(8.0, 9, 4.0, 12.0);
        let mut p = EnvParams::<f64>::default();
        let b = base_cpu_demand(&c, &p).unwrap();
        p.per_core_capacity = b / 2.0;
        p.usage_noise_sigma = 0.0;
        let v = ActivationVector::new(vec![0], &topo).unwrap();
        let out = step(&[c], &v, &topo, &p, 0).unwrap();
        assert_eq!(out.tput_dl_mbps[0], 0.0);
        assert_eq!(out.tput_ul_mbps[0], 0.0);
        assert!(!out.demand_met_dl[0]);
    }

    #[test]
    fn saturated_instances_aggregate_superlinearly() {
        let topo = GppTopology::new(3);
        let p = EnvParams::<f64>::default();
        let sat = ctx(12.0, 7, 10.0, 6.0);
        let b = base_cpu_demand(&sat, &p).unwrap();
        let v = rho(&topo, 6).unwrap();
        let out = step(&vec![sat; 5], &v, &topo, &p, 1).unwrap();
        assert!(
            out.effective_demand > 1.5 * 5.0 * b,
            "aggregate {} not markedly above linear {}",
            out.effective_demand,
            5.0 * b
        );
    }

    #[test]
    fn usage_conserves_cpu_time() {
        let topo = GppTopology::new(2);
        let mut p = EnvParams::<f64> {
            usage_noise_sigma: 0.0,
            ..Default::default()
        };
        let contexts = vec![ctx(6.0, 9, 3.0, 12.0), ctx(4.0, 11, 2.0, 15.0)];
        for a in 1..=4 {
            let v = rho(&topo, a).unwrap();
            let out = step(&contexts, &v, &topo, &p, 9).unwrap();
            let used: f64 = (0..topo.n_virtual())
                .map(|j| out.usage[j] * core_capacity_share(j, &v, &topo, &p))
                .sum();
            let expected = out.effective_demand.min(out.capacity);
            assert!(
                (used - expected).abs() < 1e-12,
                "a={a}: {used} vs {expected}"
            );
        }
        // With noise the budget holds to a few percent.
        p.usage_noise_sigma = 0.02;
        let v = rho(&topo, 4).unwrap();
        let out = step(&contexts, &v, &topo, &p, 9).unwrap();
        let used: f64 = (0..4)
            .map(|j| out.usage[j] * core_capacity_share(j, &v, &topo, &p))
            .sum();
        let expected = out.effective_demand.min(out.capacity);
        assert!((used - expected).abs() <= 0.1 * expected.max(0.1));
    }

    #[test]
    fn cores_outside_the_activation_vector_stay_idle() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        let v = ActivationVector::new(vec![1], &topo).unwrap();
        let out = step(&[ctx(2.0, 10, 1.0, 14.0)], &v, &topo, &p, 5).unwrap();
        assert_eq!(out.usage[0], 0.0);
        assert_eq!(out.usage[2], 0.0);
        assert_eq!(out.usage[3], 0.0);
        assert!(out.usage[1] > 0.0);
    }

    #[test]
    fn single_instance_reproduces_isolated_demand() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64> {
            usage_noise_sigma: 0.0,
            ..Default::default()
        };
        let c = ctx(5.0, 10, 2.5, 13.0);
        let b = base_cpu_demand(&c, &p).unwrap();
        let v = ActivationVector::new(vec![0], &topo).unwrap();
        let out = step(&[c], &v, &topo, &p, 0).unwrap();
        assert!((out.usage[0] - b).abs() < 1e-12);
        assert_eq!(out.effective_demand, b);
    }

    #[test]
    fn step_is_deterministic_in_the_seed() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        let contexts = gen_random_context(3, &ContextRanges::default(), 11).unwrap();
        let v = rho(&topo, 3).unwrap();
        let a = step(&contexts, &v, &topo, &p, 42).unwrap();
        let b = step(&contexts, &v, &topo, &p, 42).unwrap();
        let c = step(&contexts, &v, &topo, &p, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.usage, c.usage);
        assert_eq!(
            a.tput_dl_mbps, c.tput_dl_mbps,
            "noise must not touch service"
        );
    }

    #[test]
    fn empty_episode_is_rejected() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        let v = rho(&topo, 1).unwrap();
        assert!(matches!(
            step::<f64>(&[], &v, &topo, &p, 0),
            Err(CoreError::EmptyEpisode)
        ));
    }

    #[test]
    fn powering_more_cores_never_hurts_service() {
        let topo = GppTopology::new(2);
        let p = EnvParams::<f64>::default();
        for seed in 0..50 {
            let n = 2 + (seed as usize % 3);
            let contexts = gen_random_context(n, &ContextRanges::default(), seed).unwrap();
            let mut prev_dl = vec![0.0; n];
            for a in 1..=4 {
                let v = rho(&topo, a).unwrap();
                let out = step(&contexts, &v, &topo, &p, seed).unwrap();
                for (cur, prev) in out.tput_dl_mbps.iter().zip(&prev_dl) {
                    assert!(*cur >= *prev - 1e-12, "service regressed when adding cores");
                }
                prev_dl = out.tput_dl_mbps.clone();
            }
        }
    }

    #[test]
    fn default_params_validate() {
        EnvParams::<f64>::default().validate().unwrap();
        let mut bad = EnvParams::<f64>::default();
        bad.ul_cpu_weight = bad.dl_cpu_weight;
        assert!(bad.validate().is_err());
    }
}
