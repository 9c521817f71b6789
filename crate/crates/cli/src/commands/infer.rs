//! Greedy-decision latency measurement.

use crate::config::ExperimentConfig;
use crate::csvout::{f, CsvWriter};
use crate::util::{episode_seed, mix64, quantile};
use anyhow::Result;
use std::time::Instant;
use vransim_core::agent::RnDqnAgent;
use vransim_core::context::gen_random_context;
use vransim_core::scalar::Real;

const INFER_SALT: u64 = 0x1a7e_11c5;
const WARMUP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub n_vbs: usize,
    /// Relation rows encoded per decision: n(n-1), or 1 for the self pair.
    pub pairs: usize,
    pub reps: usize,
    pub p50_us: f64,
    pub p95_us: f64,
    pub p99_us: f64,
}

/// Times `greedy_action` over a pool of episodes per set size. Weights do
/// not affect the arithmetic, so an untrained network measures the same
/// pipeline a deployed one runs.
pub fn measure_latency<F: Real>(
    cfg: &ExperimentConfig,
    agent: &RnDqnAgent<F>,
    n_values: &[usize],
    reps: usize,
) -> Result<Vec<LatencyStats>> {
    let ranges = cfg.context_ranges::<F>();
    let pool_seed = mix64(cfg.run.seed ^ INFER_SALT);
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let pool: Vec<_> = (0..32)
            .map(|i| gen_random_context::<F>(n, &ranges, episode_seed(pool_seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..WARMUP {
            std::hint::black_box(agent.greedy_action(&pool[i % pool.len()])?);
        }
        let mut micros = Vec::with_capacity(reps);
        for i in 0..reps {
            let ctx = &pool[i % pool.len()];
            let t0 = Instant::now();
            std::hint::black_box(agent.greedy_action(ctx)?);
            micros.push(t0.elapsed().as_secs_f64() * 1e6);
        }
        out.push(LatencyStats {
            n_vbs: n,
            pairs: if n > 1 { n * (n - 1) } else { 1 },
            reps,
            p50_us: quantile(&micros, 0.50),
            p95_us: quantile(&micros, 0.95),
            p99_us: quantile(&micros, 0.99),
        });
    }
    Ok(out)
}

pub fn cmd_infer<F: Real>(cfg: &ExperimentConfig) -> Result<()> {
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let agent = RnDqnAgent::<F>::new(
        cfg.topology(),
        cfg.context_ranges::<F>().feature_scale(),
        cfg.agent_config::<F>(),
        mix64(cfg.run.seed ^ INFER_SALT),
    )?;
    let n_values: Vec<usize> = (cfg.train.n_vbs_min..=cfg.train.n_vbs_max).collect();
    let stats = measure_latency(cfg, &agent, &n_values, 2000)?;

    let mut w = CsvWriter::create(
        &out_dir.join("inference.csv"),
        cfg.config_hash(),
        cfg.run.seed,
        &["n_vbs", "pairs", "reps", "p50_us", "p95_us", "p99_us"],
    )?;
    for s in &stats {
        w.row(&[
            s.n_vbs.to_string(),
            s.pairs.to_string(),
            s.reps.to_string(),
            f(s.p50_us),
            f(s.p95_us),
            f(s.p99_us),
        ])?;
        println!(
            "inference: n={} pairs={:>2} p50={:.1}us p95={:.1}us p99={:.1}us",
            s.n_vbs, s.pairs, s.p50_us, s.p95_us, s.p99_us
        );
    }
    w.finish()?;
    println!("inference: wrote inference.csv in {}", out_dir.display());
    Ok(())
}
