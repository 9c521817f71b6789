//! Paired-episode benchmark of the agent against the static baselines.

use crate::commands::common::{episode_n, eval_action, PolicyEval};
use crate::config::ExperimentConfig;
use crate::csvout::{f, CsvWriter};
use crate::svg::{line_chart, Series};
use crate::util::{episode_seed, mix64, noise_seed, quantile};
use anyhow::{Context as _, Result};
use std::path::Path;
use vransim_core::agent::RnDqnAgent;
use vransim_core::baselines::{oracle_allocate, sira_allocate};
use vransim_core::context::gen_random_context;
use vransim_core::scalar::Real;

const EVAL_SALT: u64 = 0x51e2_0d5b;

/// One evaluation episode with all four policies run on identical contexts
/// and identical usage noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedEpisode<F> {
    pub idx: u64,
    pub episode_seed: u64,
    pub n_vbs: usize,
    pub agent: PolicyEval<F>,
    pub sira: PolicyEval<F>,
    pub oracle: PolicyEval<F>,
    pub allon: PolicyEval<F>,
}

/// Evaluation episodes are drawn from a seed stream disjoint from the
/// training pool, so the benchmark never replays a training episode.
pub fn paired_episodes<F: Real>(
    cfg: &ExperimentConfig,
    agent: &RnDqnAgent<F>,
    episodes: u64,
    seed: u64,
) -> Result<Vec<PairedEpisode<F>>> {
    let topo = cfg.topology();
    let ranges = cfg.context_ranges::<F>();
    let envp = cfg.env_params::<F>();
    let energyp = cfg.energy_params::<F>();
    let eval_seed = mix64(seed ^ EVAL_SALT);
    let allon_action = topo.max_action();

    let mut rows = Vec::with_capacity(episodes as usize);
    for i in 0..episodes {
        let ep_seed = episode_seed(eval_seed, i);
        let n = cfg
            .eval
            .n_vbs
            .unwrap_or_else(|| episode_n(ep_seed, cfg.train.n_vbs_min, cfg.train.n_vbs_max));
        let ctx = gen_random_context::<F>(n, &ranges, ep_seed)?;
        let noise = noise_seed(ep_seed, i);

        let a_agent = agent.greedy_action(&ctx)?;
        let a_sira = sira_allocate(&ctx, &topo, &envp)?;
        let od = oracle_allocate(&ctx, &topo, &envp, &energyp, noise)?;

        rows.push(PairedEpisode {
            idx: i,
            episode_seed: ep_seed,
            n_vbs: n,
            agent: eval_action(&ctx, a_agent, &topo, &envp, &energyp, noise)?,
            sira: eval_action(&ctx, a_sira, &topo, &envp, &energyp, noise)?,
            oracle: eval_action(&ctx, od.action, &topo, &envp, &energyp, noise)?,
            allon: eval_action(&ctx, allon_action, &topo, &envp, &energyp, noise)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: &'static str,
    pub episodes: u64,
    pub violations: u64,
    pub mean_action: f64,
    pub mean_reward: f64,
    pub mean_cost: f64,
    /// Reward quantiles at 5/25/50/75/95 percent.
    pub reward_q: [f64; 5],
    /// 1 - cost(policy)/cost(all-on) over the episodes this policy served,
    /// NaN when it served none.
    pub savings_vs_allon: f64,
}

pub const POLICIES: [&str; 4] = ["agent", "sira", "oracle", "allon"];

fn pick<F: Real>(row: &PairedEpisode<F>, policy: &str) -> PolicyEval<F> {
    match policy {
        "agent" => row.agent,
        "sira" => row.sira,
        "oracle" => row.oracle,
        "allon" => row.allon,
        _ => unreachable!("unknown policy {policy}"),
    }
}

pub fn summarize<F: Real>(rows: &[PairedEpisode<F>]) -> Vec<PolicySummary> {
    POLICIES
        .iter()
        .map(|&policy| {
            let evs: Vec<(PolicyEval<F>, PolicyEval<F>)> =
                rows.iter().map(|r| (pick(r, policy), r.allon)).collect();
            let n = evs.len() as f64;
            let violations = evs.iter().filter(|(e, _)| !e.met).count() as u64;
            let rewards: Vec<f64> = evs.iter().map(|(e, _)| e.reward.as_f64()).collect();
            let mut served_cost = 0.0;
            let mut served_allon_cost = 0.0;
            for (e, allon) in &evs {
                if e.met {
                    served_cost += e.cost.as_f64();
                    served_allon_cost += allon.cost.as_f64();
                }
            }
            PolicySummary {
                policy,
                episodes: evs.len() as u64,
                violations,
                mean_action: evs.iter().map(|(e, _)| e.action as f64).sum::<f64>() / n,
                mean_reward: rewards.iter().sum::<f64>() / n,
                mean_cost: evs.iter().map(|(e, _)| e.cost.as_f64()).sum::<f64>() / n,
                reward_q: [0.05, 0.25, 0.50, 0.75, 0.95].map(|q| quantile(&rewards, q)),
                savings_vs_allon: 1.0 - served_cost / served_allon_cost,
            }
        })
        .collect()
}

pub fn write_bench_csv<F: Real>(
    path: &Path,
    hash: u64,
    seed: u64,
    rows: &[PairedEpisode<F>],
) -> Result<()> {
    let mut cols: Vec<String> = vec!["episode".into(), "episode_seed".into(), "n_vbs".into()];
    for p in POLICIES {
        for field in ["action", "reward", "met", "cost"] {
            cols.push(format!("{p}_{field}"));
        }
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(path, hash, seed, &col_refs)?;
    for r in rows {
        let mut fields = vec![
            r.idx.to_string(),
            r.episode_seed.to_string(),
            r.n_vbs.to_string(),
        ];
        for p in POLICIES {
            let e = pick(r, p);
            fields.push(e.action.to_string());
            fields.push(f(e.reward.as_f64()));
            fields.push(u8::from(e.met).to_string());
            fields.push(f(e.cost.as_f64()));
        }
        w.row(&fields)?;
    }
    w.finish()
}

pub fn write_summary_csv(path: &Path, hash: u64, seed: u64, sums: &[PolicySummary]) -> Result<()> {
    let mut w = CsvWriter::create(
        path,
        hash,
        seed,
        &[
            "policy",
            "episodes",
            "violations",
            "violation_rate",
            "mean_action",
            "mean_reward",
            "mean_cost",
            "reward_p5",
            "reward_p25",
            "reward_p50",
            "reward_p75",
            "reward_p95",
            "savings_vs_allon",
        ],
    )?;
    for s in sums {
        w.row(&[
            s.policy.to_string(),
            s.episodes.to_string(),
            s.violations.to_string(),
            f(s.violations as f64 / s.episodes as f64),
            f(s.mean_action),
            f(s.mean_reward),
            f(s.mean_cost),
            f(s.reward_q[0]),
            f(s.reward_q[1]),
            f(s.reward_q[2]),
            f(s.reward_q[3]),
            f(s.reward_q[4]),
            f(s.savings_vs_allon),
        ])?;
    }
    w.finish()
}

pub fn load_agent<F: Real>(cfg: &ExperimentConfig) -> Result<RnDqnAgent<F>> {
    let path = cfg.resolved_out_dir().join(&cfg.eval.checkpoint);
    let json = std::fs::read_to_string(&path)
        .with_context(|| format!("reading checkpoint {} (run `train` first)", path.display()))?;
    Ok(RnDqnAgent::from_checkpoint_json(&json)?)
}

pub fn cmd_bench<F: Real>(cfg: &ExperimentConfig) -> Result<()> {
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let agent = load_agent::<F>(cfg)?;
    let rows = paired_episodes(cfg, &agent, cfg.eval.episodes, cfg.run.seed)?;
    let sums = summarize(&rows);

    let hash = cfg.config_hash();
    write_bench_csv(&out_dir.join("bench.csv"), hash, cfg.run.seed, &rows)?;
    write_summary_csv(
        &out_dir.join("bench_summary.csv"),
        hash,
        cfg.run.seed,
        &sums,
    )?;

    // Sorted reward curves read as an empirical CDF per policy.
    let series: Vec<Series> = POLICIES
        .iter()
        .map(|&p| {
            let mut rewards: Vec<f64> = rows.iter().map(|r| pick(r, p).reward.as_f64()).collect();
            rewards.sort_by(f64::total_cmp);
            Series {
                label: p.to_string(),
                points: rewards
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (i as f64 / rewards.len().max(1) as f64, v))
                    .collect(),
            }
        })
        .collect();
    line_chart(
        &out_dir.join("bench_rewards.svg"),
        "episode reward by policy",
        "episode fraction",
        "reward",
        &series,
    )?;

    for s in &sums {
        println!(
            "bench: {:<6} mean_action={:.2} mean_reward={:+.4} violations={}/{} savings_vs_allon={:.1}%",
            s.policy,
            s.mean_action,
            s.mean_reward,
            s.violations,
            s.episodes,
            100.0 * s.savings_vs_allon,
        );
    }
    println!(
        "bench: wrote bench.csv, bench_summary.csv, bench_rewards.svg in {}",
        out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_episodes_are_deterministic_and_oracle_dominates() {
        let mut cfg = ExperimentConfig::from_toml_str("").unwrap();
        cfg.agent.embed_dim = 8;
        cfg.agent.dqn_hidden = 12;
        let agent = RnDqnAgent::<f32>::new(
            cfg.topology(),
            cfg.context_ranges::<f32>().feature_scale(),
            cfg.agent_config::<f32>(),
            11,
        )
        .unwrap();
        let a = paired_episodes(&cfg, &agent, 50, 9).unwrap();
        let b = paired_episodes(&cfg, &agent, 50, 9).unwrap();
        assert_eq!(a, b);
        for r in &a {
            for p in POLICIES {
                assert!(pick(r, p).reward <= r.oracle.reward + 1e-6);
            }
        }
        let sums = summarize(&a);
        assert_eq!(sums.len(), 4);
        let oracle = &sums[2];
        let allon = &sums[3];
        assert_eq!(oracle.policy, "oracle");
        assert!(oracle.mean_reward >= allon.mean_reward);
        // All-on serves everything under the default ranges, so its own
        // savings are exactly zero.
        assert_eq!(allon.violations, 0);
        assert!(allon.savings_vs_allon.abs() < 1e-12);
    }
}
