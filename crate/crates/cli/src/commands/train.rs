//! Training loop and the `train` command.

use crate::commands::common::{episode_n, eval_action};
use crate::config::{ExperimentConfig, NMode};
use crate::csvout::{f, CsvWriter};
use crate::svg::{line_chart, Series};
use crate::util::{episode_seed, mix64, moving_average, noise_seed};
use anyhow::{Context as _, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use vransim_core::agent::RnDqnAgent;
use vransim_core::baselines::oracle_allocate;
use vransim_core::context::gen_random_context;
use vransim_core::scalar::Real;

const AGENT_SALT: u64 = 0x00a9_e171;
const PICK_SALT: u64 = 0x9c1c_5e77;

/// One training iteration, logged in evaluation precision (f64).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub iter: u64,
    pub episode_seed: u64,
    pub n_vbs: usize,
    /// Exploration rate in effect when the action was drawn.
    pub epsilon: f64,
    pub action: usize,
    pub reward: f64,
    /// None while the replay buffer is below one batch.
    pub loss: Option<f64>,
    pub greedy_action: usize,
    pub greedy_reward: f64,
    pub oracle_action: usize,
    pub oracle_reward: f64,
    /// oracle / greedy reward ratio; both are negative, so this sits in
    /// (0, 1] and 1 means the greedy policy matched the oracle.
    pub norm_reward: f64,
}

pub struct TrainOutput<F: Real> {
    pub agent: RnDqnAgent<F>,
    pub history: Vec<TrainRecord>,
    pub stopped_early: bool,
}

/// Runs the configured training loop from scratch. Fully deterministic in
/// `(cfg, seed)`: episodes are drawn from a fixed pool of
/// `train.train_set_size` seeds, usage noise is fresh per iteration, and the
/// greedy/oracle co-evaluation shares the executed iteration's noise so the
/// three policies are compared on identical episodes.
pub fn train_loop<F: Real>(cfg: &ExperimentConfig, seed: u64) -> Result<TrainOutput<F>> {
    let topo = cfg.topology();
    let ranges = cfg.context_ranges::<F>();
    let envp = cfg.env_params::<F>();
    let energyp = cfg.energy_params::<F>();
    let tc = &cfg.train;
    let mut agent = RnDqnAgent::new(
        topo,
        ranges.feature_scale(),
        cfg.agent_config::<F>(),
        mix64(seed ^ AGENT_SALT),
    )?;

    let mut pick_rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ PICK_SALT));
    let span = tc.n_vbs_max - tc.n_vbs_min + 1;
    let mut history = Vec::with_capacity(tc.iterations as usize);
    let mut window: VecDeque<f64> = VecDeque::with_capacity(tc.ma_window + 1);
    let mut window_sum = 0.0f64;
    let mut stopped_early = false;

    for t in 0..tc.iterations {
        let ep_idx = pick_rng.gen_range(0..tc.train_set_size as u64);
        let ep_seed = episode_seed(seed, ep_idx);
        let n = match tc.n_mode {
            NMode::Random => episode_n(ep_seed, tc.n_vbs_min, tc.n_vbs_max),
            NMode::Sequential => tc.n_vbs_min + ((t / tc.epoch_len) as usize) % span,
        };
        let ctx = gen_random_context::<F>(n, &ranges, ep_seed)?;
        let noise = noise_seed(ep_seed, t);

        let epsilon = agent.epsilon().as_f64();
        let action = agent.select_action(&ctx, true)?;
        let executed = eval_action(&ctx, action, &topo, &envp, &energyp, noise)?;
        agent.observe(&ctx, action, executed.reward)?;
        let loss = agent.learn()?;

        let greedy_action = agent.greedy_action(&ctx)?;
        let greedy = if greedy_action == action {
            executed
        } else {
            eval_action(&ctx, greedy_action, &topo, &envp, &energyp, noise)?
        };
        let od = oracle_allocate(&ctx, &topo, &envp, &energyp, noise)?;
        let norm_reward = od.reward.as_f64() / greedy.reward.as_f64();

        window.push_back(norm_reward);
        window_sum += norm_reward;
        if window.len() > tc.ma_window {
            window_sum -= window.pop_front().expect("window is non-empty");
        }

        history.push(TrainRecord {
            iter: t,
            episode_seed: ep_seed,
            n_vbs: n,
            epsilon,
            action,
            reward: executed.reward.as_f64(),
            loss: loss.map(Real::as_f64),
            greedy_action,
            greedy_reward: greedy.reward.as_f64(),
            oracle_action: od.action,
            oracle_reward: od.reward.as_f64(),
            norm_reward,
        });

        if let Some(th) = tc.early_stop_ma {
            if window.len() == tc.ma_window && window_sum / tc.ma_window as f64 >= th {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainOutput {
        agent,
        history,
        stopped_early,
    })
}

pub const TRAIN_COLUMNS: [&str; 12] = [
    "iter",
    "episode_seed",
    "n_vbs",
    "epsilon",
    "action",
    "reward",
    "loss",
    "greedy_action",
    "greedy_reward",
    "oracle_action",
    "oracle_reward",
    "norm_reward",
];

pub fn write_train_csv(
    path: &std::path::Path,
    hash: u64,
    seed: u64,
    history: &[TrainRecord],
) -> Result<()> {
    let mut w = CsvWriter::create(path, hash, seed, &TRAIN_COLUMNS)?;
    for r in history {
        w.row(&[
            r.iter.to_string(),
            r.episode_seed.to_string(),
            r.n_vbs.to_string(),
            f(r.epsilon),
            r.action.to_string(),
            f(r.reward),
            r.loss.map(f).unwrap_or_default(),
            r.greedy_action.to_string(),
            f(r.greedy_reward),
            r.oracle_action.to_string(),
            f(r.oracle_reward),
            f(r.norm_reward),
        ])?;
    }
    w.finish()
}

pub fn cmd_train<F: Real>(cfg: &ExperimentConfig) -> Result<()> {
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let seed = cfg.run.seed;
    let out = train_loop::<F>(cfg, seed)?;

    write_train_csv(
        &out_dir.join("train.csv"),
        cfg.config_hash(),
        seed,
        &out.history,
    )?;

    let ckpt = out_dir.join(&cfg.train.checkpoint);
    std::fs::write(&ckpt, out.agent.to_checkpoint_json()?)
        .with_context(|| format!("writing {}", ckpt.display()))?;

    let norm: Vec<f64> = out.history.iter().map(|r| r.norm_reward).collect();
    let ma = moving_average(&norm, cfg.train.ma_window);
    let series = vec![
        Series {
            label: format!("norm reward MA({})", cfg.train.ma_window),
            points: ma.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        },
        Series {
            label: "epsilon".into(),
            points: out
                .history
                .iter()
                .map(|r| (r.iter as f64, r.epsilon))
                .collect(),
        },
    ];
    line_chart(
        &out_dir.join("train_curve.svg"),
        "training progress",
        "iteration",
        "value",
        &series,
    )?;

    let final_ma = ma.last().copied().unwrap_or(f64::NAN);
    println!(
        "train: {} iterations{}, final norm-reward MA({}) = {:.4}",
        out.history.len(),
        if out.stopped_early {
            " (early stop)"
        } else {
            ""
        },
        cfg.train.ma_window,
        final_ma,
    );
    println!(
        "train: wrote train.csv, train_curve.svg, {} in {}",
        cfg.train.checkpoint,
        out_dir.display()
    );
    Ok(())
}
