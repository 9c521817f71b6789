//! Experiment configuration: one TOML file drives every subcommand.
//!
//! Every section has full defaults, so an empty file is a valid experiment.
//! The configuration is fingerprinted (FNV-1a over its canonical JSON form)
//! and the fingerprint is stamped into every artifact, which is what makes
//! reruns checkable byte for byte.

use crate::util::fnv1a64;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use vransim_core::agent::AgentConfig;
use vransim_core::context::ContextRanges;
use vransim_core::energy::EnergyParams;
use vransim_core::env::{ContentionParams, EnvParams};
use vransim_core::nn::AdamHyper;
use vransim_core::scalar::Real;
use vransim_core::topology::GppTopology;

/// Environment variable overriding `[run] out_dir`.
pub const OUT_DIR_ENV: &str = "VRANSIM_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunCfg {
    pub precision: Precision,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunCfg {
    fn default() -> Self {
        Self {
            precision: Precision::F32,
            seed: 1,
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyCfg {
    pub n_physical: usize,
}

impl Default for TopologyCfg {
    fn default() -> Self {
        Self { n_physical: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvCfg {
    pub base_idle_cpu: f64,
    pub dl_cpu_weight: f64,
    pub ul_cpu_weight: f64,
    pub mcs_cost_gain: f64,
    pub per_vbs_cpu_cap: f64,
    pub per_core_capacity: f64,
    pub smt_throughput_factor: f64,
    pub collapse_sharpness: f64,
    pub usage_noise_sigma: f64,
    pub seccomp_tax: f64,
    pub ctxswitch_tax_at_full: f64,
    pub ipc_anchors: Vec<(u32, f64)>,
}

impl Default for EnvCfg {
    fn default() -> Self {
        let p = EnvParams::<f64>::default();
        Self {
            base_idle_cpu: p.base_idle_cpu,
            dl_cpu_weight: p.dl_cpu_weight,
            ul_cpu_weight: p.ul_cpu_weight,
            mcs_cost_gain: p.mcs_cost_gain,
            per_vbs_cpu_cap: p.per_vbs_cpu_cap,
            per_core_capacity: p.per_core_capacity,
            smt_throughput_factor: p.smt_throughput_factor,
            collapse_sharpness: p.collapse_sharpness,
            usage_noise_sigma: p.usage_noise_sigma,
            seccomp_tax: p.contention.seccomp_tax,
            ctxswitch_tax_at_full: p.contention.ctxswitch_tax_at_full,
            ipc_anchors: p.contention.ipc_anchors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextCfg {
    pub d_dl_max_mbps: f64,
    pub d_ul_max_mbps: f64,
    pub cqi_dl_min: u8,
    pub cqi_dl_max: u8,
    pub snr_ul_min_db: f64,
    pub snr_ul_max_db: f64,
    pub prb_total: u32,
}

impl Default for ContextCfg {
    fn default() -> Self {
        let r = ContextRanges::<f64>::default();
        Self {
            d_dl_max_mbps: r.d_dl_max_mbps,
            d_ul_max_mbps: r.d_ul_max_mbps,
            cqi_dl_min: r.cqi_dl_min,
            cqi_dl_max: r.cqi_dl_max,
            snr_ul_min_db: r.snr_ul_min_db,
            snr_ul_max_db: r.snr_ul_max_db,
            prb_total: r.prb_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCfg {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta: f64,
}

impl Default for EnergyCfg {
    fn default() -> Self {
        let p = EnergyParams::<f64>::default();
        Self {
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            alpha3: p.alpha3,
            beta: p.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentCfg {
    pub embed_dim: usize,
    pub dqn_hidden: usize,
    pub gamma: f64,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_every: u64,
    pub eps_min: f64,
    /// Exploration decay constant in steps; 0 derives it as 60% of the
    /// training set size.
    pub eps_decay: f64,
}

impl Default for AgentCfg {
    fn default() -> Self {
        let a = AgentConfig::<f64>::default();
        Self {
            embed_dim: a.embed_dim,
            dqn_hidden: a.dqn_hidden,
            gamma: a.gamma,
            lr: a.adam.lr,
            adam_beta1: a.adam.beta1,
            adam_beta2: a.adam.beta2,
            adam_eps: a.adam.eps,
            replay_capacity: a.replay_capacity,
            batch_size: a.batch_size,
            target_sync_every: a.target_sync_every,
            eps_min: a.eps_min,
            eps_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NMode {
    /// Per-episode vBS count drawn uniformly from the configured range.
    Random,
    /// vBS count fixed within an epoch, cycling through the range.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCfg {
    pub iterations: u64,
    pub train_set_size: usize,
    pub n_vbs_min: usize,
    pub n_vbs_max: usize,
    pub n_mode: NMode,
    /// Iterations per vBS-count regime in sequential mode.
    pub epoch_len: u64,
    pub checkpoint: String,
    /// Stop once the moving average of the normalized reward reaches this.
    pub early_stop_ma: Option<f64>,
    pub ma_window: usize,
}

impl Default for TrainCfg {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            train_set_size: 1000,
            n_vbs_min: 1,
            n_vbs_max: 4,
            n_mode: NMode::Random,
            epoch_len: 3000,
            checkpoint: "agent.json".into(),
            early_stop_ma: None,
            ma_window: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Random,
    Traces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalCfg {
    pub episodes: u64,
    /// Fixed vBS count; unset draws from the training range.
    pub n_vbs: Option<usize>,
    pub mode: EvalMode,
    /// Keep learning from greedily-acted decisions during evaluation.
    pub online_learn: bool,
    pub checkpoint: String,
}

impl Default for EvalCfg {
    fn default() -> Self {
        Self {
            episodes: 2000,
            n_vbs: None,
            mode: EvalMode::Random,
            online_learn: false,
            checkpoint: "agent.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TracesCfg {
    pub days: u32,
    pub interval_secs: u32,
    /// Lifts the diurnal/office load valleys toward the peak; 0 keeps the
    /// deep-trough default shape.
    pub valley_lift: f64,
}

impl Default for TracesCfg {
    fn default() -> Self {
        Self {
            days: 5,
            interval_secs: 60,
            valley_lift: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunCfg,
    pub topology: TopologyCfg,
    pub env: EnvCfg,
    pub context: ContextCfg,
    pub energy: EnergyCfg,
    pub agent: AgentCfg,
    pub train: TrainCfg,
    pub eval: EvalCfg,
    pub traces: TracesCfg,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).context("parsing configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&s)
    }

    pub fn topology(&self) -> GppTopology {
        GppTopology::new(self.topology.n_physical)
    }

    pub fn context_ranges<F: Real>(&self) -> ContextRanges<F> {
        ContextRanges {
            d_dl_max_mbps: F::of_f64(self.context.d_dl_max_mbps),
            d_ul_max_mbps: F::of_f64(self.context.d_ul_max_mbps),
            cqi_dl_min: self.context.cqi_dl_min,
            cqi_dl_max: self.context.cqi_dl_max,
            snr_ul_min_db: F::of_f64(self.context.snr_ul_min_db),
            snr_ul_max_db: F::of_f64(self.context.snr_ul_max_db),
            prb_total: self.context.prb_total,
        }
    }

    pub fn env_params<F: Real>(&self) -> EnvParams<F> {
        EnvParams {
            prb_total: self.context.prb_total,
            base_idle_cpu: F::of_f64(self.env.base_idle_cpu),
            dl_cpu_weight: F::of_f64(self.env.dl_cpu_weight),
            ul_cpu_weight: F::of_f64(self.env.ul_cpu_weight),
            mcs_cost_gain: F::of_f64(self.env.mcs_cost_gain),
            per_vbs_cpu_cap: F::of_f64(self.env.per_vbs_cpu_cap),
            per_core_capacity: F::of_f64(self.env.per_core_capacity),
            smt_throughput_factor: F::of_f64(self.env.smt_throughput_factor),
            collapse_sharpness: F::of_f64(self.env.collapse_sharpness),
            usage_noise_sigma: F::of_f64(self.env.usage_noise_sigma),
            contention: ContentionParams {
                ipc_anchors: self
                    .env
                    .ipc_anchors
                    .iter()
                    .map(|&(n, v)| (n, F::of_f64(v)))
                    .collect(),
                seccomp_tax: F::of_f64(self.env.seccomp_tax),
                ctxswitch_tax_at_full: F::of_f64(self.env.ctxswitch_tax_at_full),
            },
        }
    }

    pub fn energy_params<F: Real>(&self) -> EnergyParams<F> {
        EnergyParams {
            alpha1: F::of_f64(self.energy.alpha1),
            alpha2: F::of_f64(self.energy.alpha2),
            alpha3: F::of_f64(self.energy.alpha3),
            beta: F::of_f64(self.energy.beta),
        }
    }

    /// Agent hyperparameters with the exploration decay resolved.
    pub fn agent_config<F: Real>(&self) -> AgentConfig<F> {
        let decay = if self.agent.eps_decay > 0.0 {
            self.agent.eps_decay
        } else {
            0.6 * self.train.train_set_size as f64
        };
        AgentConfig {
            embed_dim: self.agent.embed_dim,
            dqn_hidden: self.agent.dqn_hidden,
            gamma: F::of_f64(self.agent.gamma),
            adam: AdamHyper {
                lr: F::of_f64(self.agent.lr),
                beta1: F::of_f64(self.agent.adam_beta1),
                beta2: F::of_f64(self.agent.adam_beta2),
                eps: F::of_f64(self.agent.adam_eps),
            },
            replay_capacity: self.agent.replay_capacity,
            batch_size: self.agent.batch_size,
            target_sync_every: self.agent.target_sync_every,
            eps_min: F::of_f64(self.agent.eps_min),
            eps_decay: F::of_f64(decay),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topology.n_physical == 0 {
            bail!("topology.n_physical must be positive");
        }
        if self.train.n_vbs_min == 0 || self.train.n_vbs_min > self.train.n_vbs_max {
            bail!("train.n_vbs range is malformed");
        }
        if self.train.iterations == 0 || self.train.train_set_size == 0 {
            bail!("train.iterations and train.train_set_size must be positive");
        }
        if self.train.ma_window == 0 {
            bail!("train.ma_window must be positive");
        }
        if self.train.n_mode == NMode::Sequential && self.train.epoch_len == 0 {
            bail!("train.epoch_len must be positive in sequential mode");
        }
        if self.eval.episodes == 0 {
            bail!("eval.episodes must be positive");
        }
        if let Some(n) = self.eval.n_vbs {
            if n == 0 {
                bail!("eval.n_vbs must be positive when set");
            }
        }
        if self.traces.days == 0 || self.traces.interval_secs == 0 {
            bail!("traces.days and traces.interval_secs must be positive");
        }
        if !(0.0..1.0).contains(&self.traces.valley_lift) {
            bail!("traces.valley_lift must be in [0, 1)");
        }
        self.context_ranges::<f64>()
            .validate()
            .map_err(anyhow::Error::from)
            .context("context section")?;
        self.env_params::<f64>()
            .validate()
            .map_err(anyhow::Error::from)
            .context("env section")?;
        if !self.energy_params::<f64>().validate() {
            bail!("energy section violates alpha1 > alpha2 > alpha3 >= 0, beta > 0, alpha1 + beta <= 1");
        }
        self.agent_config::<f64>()
            .validate()
            .map_err(anyhow::Error::from)
            .context("agent section")?;
        Ok(())
    }

    /// Stable fingerprint of everything that changes what the experiment
    /// computes. The output directory is excluded so the same run lands on
    /// the same hash wherever its artifacts go.
    pub fn config_hash(&self) -> u64 {
        let mut c = self.clone();
        c.run.out_dir = PathBuf::new();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        fnv1a64(canonical.as_bytes())
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.config_hash())
    }

    /// Output directory, honoring the environment override.
    pub fn resolved_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.run.out_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_yields_the_default_experiment() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.agent.embed_dim, 128);
        assert_eq!(cfg.agent.dqn_hidden, 256);
        assert_eq!(cfg.train.iterations, 10_000);
    }

    #[test]
    fn sections_override_independently() {
        let cfg = ExperimentConfig::from_toml_str(
            "[run]\nseed = 9\nprecision = \"f64\"\n\n[agent]\nlr = 0.001\n",
        )
        .unwrap();
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.run.precision, Precision::F64);
        assert_eq!(cfg.agent.lr, 0.001);
        assert_eq!(cfg.agent.batch_size, 128);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[run]\nseeed = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[agent]\nlearning_rate = 0.1\n").is_err());
    }

    #[test]
    fn invalid_sections_fail_validation() {
        assert!(ExperimentConfig::from_toml_str("[topology]\nn_physical = 0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[energy]\nalpha2 = 0.9\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[train]\nn_vbs_min = 5\n").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = ExperimentConfig::from_toml_str("[run]\nseed = 2\n").unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
        let d = ExperimentConfig::from_toml_str("[run]\nout_dir = \"elsewhere\"\n").unwrap();
        assert_eq!(a.config_hash(), d.config_hash());
        assert_eq!(a.hash_hex().len(), 16);
    }

    #[test]
    fn exploration_decay_defaults_to_sixty_percent_of_the_training_set() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.agent_config::<f64>().eps_decay, 600.0);
        let cfg = ExperimentConfig::from_toml_str("[agent]\neps_decay = 50.0\n").unwrap();
        assert_eq!(cfg.agent_config::<f64>().eps_decay, 50.0);
    }
}
