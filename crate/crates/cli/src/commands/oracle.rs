//! Oracle diagnostics: packed placements against the full activation lattice.

use crate::commands::common::episode_n;
use crate::config::ExperimentConfig;
use crate::csvout::{f, CsvWriter};
use crate::util::{episode_seed, mix64, noise_seed};
use anyhow::Result;
use vransim_core::baselines::{full_oracle_allocate, oracle_allocate};
use vransim_core::context::gen_random_context;
use vransim_core::scalar::Real;

const ORACLE_SALT: u64 = 0x0b5e_55ed;

/// The full lattice has 2^(2N) - 1 non-empty placements, so it is only
/// enumerated on small machines.
const FULL_MAX_PHYSICAL: usize = 3;

pub fn cmd_oracle<F: Real>(cfg: &ExperimentConfig) -> Result<()> {
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let topo = cfg.topology();
    let ranges = cfg.context_ranges::<F>();
    let envp = cfg.env_params::<F>();
    let energyp = cfg.energy_params::<F>();
    let seed = cfg.run.seed;
    let with_full = topo.n_physical() <= FULL_MAX_PHYSICAL;

    let mut w = CsvWriter::create(
        &out_dir.join("oracle.csv"),
        cfg.config_hash(),
        seed,
        &[
            "episode",
            "episode_seed",
            "n_vbs",
            "packed_action",
            "packed_reward",
            "full_cores",
            "full_reward",
            "full_beats_packed",
        ],
    )?;

    let oracle_seed = mix64(seed ^ ORACLE_SALT);
    let mut full_wins = 0u64;
    let mut max_gap = 0.0f64;
    for i in 0..cfg.eval.episodes {
        let ep_seed = episode_seed(oracle_seed, i);
        let n = cfg
            .eval
            .n_vbs
            .unwrap_or_else(|| episode_n(ep_seed, cfg.train.n_vbs_min, cfg.train.n_vbs_max));
        let ctx = gen_random_context::<F>(n, &ranges, ep_seed)?;
        let noise = noise_seed(ep_seed, i);
        let packed = oracle_allocate(&ctx, &topo, &envp, &energyp, noise)?;

        let (full_cores, full_reward, beats) = if with_full {
            let full = full_oracle_allocate(&ctx, &topo, &envp, &energyp, noise)?;
            let beats = full.reward > packed.reward;
            if beats {
                full_wins += 1;
                max_gap = max_gap.max((full.reward - packed.reward).as_f64());
            }
            (
                full.vector.cardinality().to_string(),
                f(full.reward.as_f64()),
                u8::from(beats).to_string(),
            )
        } else {
            (String::new(), String::new(), String::new())
        };

        w.row(&[
            i.to_string(),
            ep_seed.to_string(),
            n.to_string(),
            packed.action.to_string(),
            f(packed.reward.as_f64()),
            full_cores,
            full_reward,
            beats,
        ])?;
    }
    w.finish()?;

    if with_full {
        println!(
            "oracle: full lattice beat the packed rule on {}/{} episodes (max reward gap {:.4})",
            full_wins, cfg.eval.episodes, max_gap
        );
    } else {
        println!(
            "oracle: packed rule only ({} physical CPUs exceeds the lattice cap of {})",
            topo.n_physical(),
            FULL_MAX_PHYSICAL
        );
    }
    println!("oracle: wrote oracle.csv in {}", out_dir.display());
    Ok(())
}
