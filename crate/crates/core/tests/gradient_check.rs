//! End-to-end gradient verification: analytic gradients of the training loss
//! against central finite differences, differentiating through the relation
//! encoder and the Q head jointly.

use vransim_core::agent::{AgentConfig, RnDqnAgent, Transition};
use vransim_core::context::{gen_random_context, ContextRanges};
use vransim_core::topology::GppTopology;

fn tiny_agent(gamma: f64, seed: u64) -> RnDqnAgent<f64> {
    let cfg = AgentConfig::<f64> {
        embed_dim: 6,
        dqn_hidden: 8,
        gamma,
        replay_capacity: 16,
        batch_size: 4,
        eps_decay: 10.0,
        ..AgentConfig::default()
    };
    RnDqnAgent::new(
        GppTopology::new(2),
        ContextRanges::default().feature_scale(),
        cfg,
        seed,
    )
    .unwrap()
}

fn fixed_batch(agent: &RnDqnAgent<f64>) -> Vec<Transition<f64>> {
    (0..4usize)
        .map(|i| {
            let ctx = gen_random_context(1 + i, &ContextRanges::default(), 300 + i as u64).unwrap();
            Transition {
                feats: agent.features(&ctx).unwrap(),
                action: 1 + i,
                reward: -0.2 - 0.13 * i as f64,
            }
        })
        .collect()
}

fn check_all_params(
    agent: &mut RnDqnAgent<f64>,
    batch: &[Transition<f64>],
    stride: usize,
    min_probes: usize,
) {
    let (_, rn_grad, dqn_grad) = agent.training_grads(batch).unwrap();
    let h = 1e-5;
    let rn_count = agent.primary.rn.net.param_count();
    let dqn_count = agent.primary.dqn.param_count();
    let mut probes = 0;
    for idx in (0..rn_count + dqn_count).step_by(stride) {
        let (in_rn, local) = if idx < rn_count {
            (true, idx)
        } else {
            (false, idx - rn_count)
        };
        let bump = |agent: &mut RnDqnAgent<f64>, d: f64| {
            if in_rn {
                agent.primary.rn.net.add_flat(local, d);
            } else {
                agent.primary.dqn.add_flat(local, d);
            }
        };
        bump(agent, h);
        let up = agent.training_loss(batch).unwrap();
        bump(agent, -2.0 * h);
        let down = agent.training_loss(batch).unwrap();
        bump(agent, h);
        let num = (up - down) / (2.0 * h);
        let ana = if in_rn {
            rn_grad.get_flat(local)
        } else {
            dqn_grad.get_flat(local)
        };
        let denom = (num.abs() + ana.abs()).max(1e-8);
        assert!(
            (num - ana).abs() / denom < 1e-5,
            "param {idx} (rn={in_rn}): numeric {num} vs analytic {ana}"
        );
        probes += 1;
    }
    assert!(probes >= min_probes, "only {probes} probes");
}

#[test]
fn bandit_loss_gradients_match_finite_differences() {
    let mut agent = tiny_agent(0.0, 42);
    let batch = fixed_batch(&agent);
    check_all_params(&mut agent, &batch, 1, 100);
}

#[test]
fn discounted_loss_gradients_match_finite_differences() {
    // With a positive discount the target network contributes to the label
    // but must stay out of the differentiated path.
    let mut agent = tiny_agent(0.5, 43);
    let batch = fixed_batch(&agent);
    check_all_params(&mut agent, &batch, 3, 50);
}
