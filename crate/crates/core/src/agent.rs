//! Learning orchestrator: a relation-network encoder feeding a DQN head,
//! trained as a contextual bandit over core-count actions.
//!
//! Actions are core counts `1..=2N`; the environment maps a count to cores
//! through [`crate::topology::rho`]. Replay stores raw per-vBS features, so
//! sampled batches are re-encoded through the current encoder weights and
//! both networks train jointly from the TD error.

use crate::context::{FeatureScale, VbsContext};
use crate::error::{CoreError, Result};
use crate::nn::{
    smooth_l1, smooth_l1_grad, td_target, AdamHyper, AdamState, EpsilonSchedule, MlpNet, NetGrad,
    ReplayBuffer,
};
use crate::relnet::RelationNet;
use crate::scalar::Real;
use crate::topology::GppTopology;
use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const CHECKPOINT_VERSION: u32 = 1;

/// Batch loss with the optional encoder and head gradients.
type LossAndGrads<F> = (F, Option<NetGrad<F>>, Option<NetGrad<F>>);

/// One bandit interaction. Features are stored raw (not encoded) so learning
/// always re-encodes through the current relation-network weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<F> {
    pub feats: Vec<[F; 4]>,
    /// Core count taken, `1..=2N`.
    pub action: usize,
    pub reward: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig<F> {
    pub embed_dim: usize,
    pub dqn_hidden: usize,
    /// Discount; zero for the bandit setting. When positive, the next state
    /// is approximated by the current one (episodes are single decisions).
    pub gamma: F,
    pub adam: AdamHyper<F>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Learn steps between target-network refreshes.
    pub target_sync_every: u64,
    pub eps_min: F,
    /// Exploration decay constant in decision steps.
    pub eps_decay: F,
}

impl<F: Real> Default for AgentConfig<F> {
    fn default() -> Self {
        Self {
            embed_dim: 128,
            dqn_hidden: 256,
            gamma: F::zero(),
            adam: AdamHyper::default(),
            replay_capacity: 20_000,
            batch_size: 128,
            target_sync_every: 500,
            eps_min: F::of_f64(0.05),
            eps_decay: F::of_f64(600.0),
        }
    }
}

impl<F: Real> AgentConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.dqn_hidden == 0 {
            return Err(CoreError::InvalidContext("zero network width".into()));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(CoreError::InvalidContext(
                "replay capacity must cover at least one batch".into(),
            ));
        }
        if self.gamma < F::zero() || self.gamma >= F::one() {
            return Err(CoreError::InvalidContext("gamma must lie in [0, 1)".into()));
        }
        if self.target_sync_every == 0 {
            return Err(CoreError::InvalidContext(
                "target_sync_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Encoder plus Q head. Cloned wholesale into the target network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork<F> {
    pub rn: RelationNet<F>,
    pub dqn: MlpNet<F>,
}

impl<F: Real> QNetwork<F> {
    fn new(cfg: &AgentConfig<F>, n_actions: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            rn: RelationNet::new(cfg.embed_dim, rng),
            dqn: MlpNet::new(&[cfg.embed_dim, cfg.dqn_hidden, n_actions], true, rng),
        }
    }

    /// Q values over all actions for one context set; index `a-1` holds the
    /// value of powering `a` cores.
    pub fn q_values(&self, feats: &[[F; 4]]) -> Vec<F> {
        let state = self.rn.encode(feats);
        let s = state.insert_axis(Axis(0));
        self.dqn.forward(s.view()).row(0).to_vec()
    }

    fn param_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .rn
            .net
            .param_tensors()
            .iter()
            .map(|t| t.len())
            .collect();
        s.extend(self.dqn.param_tensors().iter().map(|t| t.len()));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnDqnAgent<F> {
    topo: GppTopology,
    scale: FeatureScale<F>,
    cfg: AgentConfig<F>,
    pub primary: QNetwork<F>,
    pub target: QNetwork<F>,
    adam: AdamState<F>,
    replay: ReplayBuffer<Transition<F>>,
    schedule: EpsilonSchedule<F>,
    select_steps: u64,
    learn_steps: u64,
    rng: ChaCha8Rng,
}

impl<F: Real> RnDqnAgent<F> {
    pub fn new(
        topo: GppTopology,
        scale: FeatureScale<F>,
        cfg: AgentConfig<F>,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let primary = QNetwork::new(&cfg, topo.max_action(), &mut rng);
        let target = primary.clone();
        let adam = AdamState::new(cfg.adam, &primary.param_sizes());
        Ok(Self {
            topo,
            scale,
            cfg,
            primary,
            target,
            adam,
            replay: ReplayBuffer::new(cfg.replay_capacity),
            schedule: EpsilonSchedule::new(cfg.eps_min, cfg.eps_decay),
            select_steps: 0,
            learn_steps: 0,
            rng,
        })
    }

    pub fn topology(&self) -> &GppTopology {
        &self.topo
    }

    pub fn config(&self) -> &AgentConfig<F> {
        &self.cfg
    }

    pub fn n_actions(&self) -> usize {
        self.topo.max_action()
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    pub fn select_steps(&self) -> u64 {
        self.select_steps
    }

    /// Exploration rate the next exploring selection will use.
    pub fn epsilon(&self) -> F {
        self.schedule.value(self.select_steps)
    }

    pub fn features(&self, contexts: &[VbsContext<F>]) -> Result<Vec<[F; 4]>> {
        if contexts.is_empty() {
            return Err(CoreError::EmptyEpisode);
        }
        Ok(contexts.iter().map(|c| self.scale.features(c)).collect())
    }

    /// Epsilon-greedy action selection. Exploring calls advance the
    /// exploration schedule; pure greedy evaluation does not.
    pub fn select_action(&mut self, contexts: &[VbsContext<F>], explore: bool) -> Result<usize> {
        let feats = self.features(contexts)?;
        if explore {
            let eps = self.schedule.value(self.select_steps).as_f64();
            self.select_steps += 1;
            if self.rng.gen::<f64>() < eps {
                return Ok(self.rng.gen_range(1..=self.n_actions()));
            }
        }
        Ok(greedy_from_q(&self.primary.q_values(&feats)))
    }

    /// Greedy action under the current primary network; no state is touched.
    pub fn greedy_action(&self, contexts: &[VbsContext<F>]) -> Result<usize> {
        let feats = self.features(contexts)?;
        Ok(greedy_from_q(&self.primary.q_values(&feats)))
    }

    /// Records one interaction in replay.
    pub fn observe(&mut self, contexts: &[VbsContext<F>], action: usize, reward: F) -> Result<()> {
        let feats = self.features(contexts)?;
        if action == 0 || action > self.n_actions() {
            return Err(CoreError::InvalidAction {
                action,
                max: self.n_actions(),
            });
        }
        if !reward.is_finite() {
            return Err(CoreError::NonFinite {
                step: self.learn_steps,
                what: "observed reward".into(),
            });
        }
        self.replay.push(Transition {
            feats,
            action,
            reward,
        });
        Ok(())
    }

    /// Inserts an already-built transition into replay.
    pub fn observe_transition(&mut self, t: Transition<F>) {
        assert!(
            t.action >= 1 && t.action <= self.n_actions() && !t.feats.is_empty(),
            "malformed transition"
        );
        self.replay.push(t);
    }

    /// Forward-only training loss of a batch under the current weights.
    pub fn training_loss(&self, batch: &[Transition<F>]) -> Result<F> {
        self.batch_pass(batch).map(|(loss, _, _)| loss)
    }

    /// Loss plus parameter gradients (encoder first, then head) of a batch.
    pub fn training_grads(&self, batch: &[Transition<F>]) -> Result<(F, NetGrad<F>, NetGrad<F>)> {
        self.batch_pass(batch)
            .map(|(loss, rn, dqn)| (loss, rn.expect("grads requested"), dqn.expect("grads")))
    }

    fn batch_pass(&self, batch: &[Transition<F>]) -> Result<LossAndGrads<F>> {
        if batch.is_empty() {
            return Err(CoreError::EmptyEpisode);
        }
        let sets: Vec<Vec<[F; 4]>> = batch.iter().map(|t| t.feats.clone()).collect();
        let (states, rn_cache) = self.primary.rn.encode_batch(&sets);
        let (q_all, dqn_cache) = self.primary.dqn.forward_cached(states.view());

        // Bootstrap term from the target network; the next state of a
        // single-decision episode is approximated by the state itself.
        let next_q_max: Vec<F> = if self.cfg.gamma > F::zero() {
            let (t_states, _) = self.target.rn.encode_batch(&sets);
            let t_q = self.target.dqn.forward(t_states.view());
            t_q.rows()
                .into_iter()
                .map(|r| r.iter().cloned().fold(F::neg_infinity(), F::max))
                .collect()
        } else {
            vec![F::zero(); batch.len()]
        };

        let inv_b = F::one() / F::of_usize(batch.len());
        let mut d_q = Array2::zeros(q_all.dim());
        let mut loss = F::zero();
        for (b, tr) in batch.iter().enumerate() {
            let a = tr.action - 1;
            let y = td_target(tr.reward, next_q_max[b], self.cfg.gamma);
            let diff = q_all[[b, a]] - y;
            loss += smooth_l1(diff) * inv_b;
            d_q[[b, a]] = smooth_l1_grad(diff) * inv_b;
        }
        if !loss.is_finite() {
            return Err(CoreError::NonFinite {
                step: self.learn_steps,
                what: "training loss".into(),
            });
        }
        let (dqn_grad, d_states) = self.primary.dqn.backward(&dqn_cache, d_q);
        let rn_grad = self
            .primary
            .rn
            .encode_batch_backward(&rn_cache, d_states.view());
        Ok((loss, Some(rn_grad), Some(dqn_grad)))
    }

    /// One learning step: sample a batch, descend, refresh the target on
    /// schedule. Returns the batch loss, or `None` while replay is short.
    pub fn learn(&mut self) -> Result<Option<F>> {
        let batch: Vec<Transition<F>> = match self.replay.sample(&mut self.rng, self.cfg.batch_size)
        {
            None => return Ok(None),
            Some(refs) => refs.into_iter().cloned().collect(),
        };
        let (loss, rn_grad, dqn_grad) = self.training_grads(&batch)?;
        {
            let mut params = self.primary.rn.net.param_tensors_mut();
            params.extend(self.primary.dqn.param_tensors_mut());
            let mut grads = rn_grad.tensors();
            grads.extend(dqn_grad.tensors());
            self.adam.step(&mut params, &grads);
        }
        self.learn_steps += 1;
        if self.learn_steps % self.cfg.target_sync_every == 0 {
            self.target = self.primary.clone();
        }
        Ok(Some(loss))
    }

    pub fn to_checkpoint_json(&self) -> Result<String> {
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            precision: F::NAME.to_string(),
            agent: self.clone(),
        };
        serde_json::to_string(&cp).map_err(|e| CoreError::Parse(e.to_string()))
    }

    pub fn from_checkpoint_json(json: &str) -> Result<Self> {
        // Probe the header first so a precision mismatch reports cleanly
        // instead of as a serde type error.
        let head: CheckpointHead =
            serde_json::from_str(json).map_err(|e| CoreError::Parse(e.to_string()))?;
        if head.version != CHECKPOINT_VERSION {
            return Err(CoreError::CheckpointMismatch(format!(
                "checkpoint version {} (expected {})",
                head.version, CHECKPOINT_VERSION
            )));
        }
        if head.precision != F::NAME {
            return Err(CoreError::CheckpointMismatch(format!(
                "checkpoint precision {} (expected {})",
                head.precision,
                F::NAME
            )));
        }
        let cp: Checkpoint<F> =
            serde_json::from_str(json).map_err(|e| CoreError::Parse(e.to_string()))?;
        cp.agent.cfg.validate()?;
        Ok(cp.agent)
    }
}

/// Greedy argmax over Q with ties resolved toward fewer cores.
fn greedy_from_q<F: Real>(q: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best + 1
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<F> {
    version: u32,
    precision: String,
    agent: RnDqnAgent<F>,
}

#[derive(Deserialize)]
struct CheckpointHead {
    version: u32,
    precision: String,
}

/// Convenience wrapper mirroring [`greedy_from_q`] for external callers
/// holding a Q row.
pub fn argmax_action<F: Real>(q: ArrayView1<F>) -> usize {
    greedy_from_q(q.as_slice().expect("contiguous Q row"))
}
