//! Actor-critic PPO on the surrogate's observation/action spaces.
//!
//! The actor outputs an action mean; exploration adds fixed-std Gaussian
//! noise and log-probabilities refer to the raw (pre-clamp) sample. Returns
//! are n-step with the bootstrap truncated at episode end, and updates
//! minimize the clipped surrogate for the actor plus squared error for the
//! critic.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ppo::net::{Adam, Mlp};
use crate::surrogate::{Controller, Trajectory, ACTUATORS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Hidden layer sizes for both networks.
    pub hidden: Vec<usize>,
    /// n-step return horizon.
    pub nstep: usize,
    /// Reward discount.
    pub gamma: f64,
    /// PPO clip value.
    pub clip: f64,
    /// Fixed exploration standard deviation.
    pub exploration_std: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Simulation count at which the learning rate switches to `lr_final`;
    /// scaled to two thirds of the total budget by the harness.
    pub lr_decay_at_simulations: u64,
    /// Optimization epochs per update call.
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            nstep: 4,
            gamma: 0.99,
            clip: 0.2,
            exploration_std: 0.5,
            lr_initial: 3e-4,
            lr_final: 1e-4,
            lr_decay_at_simulations: 30_000,
            epochs: 4,
            minibatch: 256,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clip <= 0.0 {
            return Err(Error::Config("clip must be positive".into()));
        }
        if !(0.0 < self.gamma && self.gamma <= 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1]".into()));
        }
        if self.nstep < 1 {
            return Err(Error::Config("nstep must be at least 1".into()));
        }
        if self.exploration_std <= 0.0 {
            return Err(Error::Config("exploration std must be positive".into()));
        }
        if self.epochs == 0 || self.minibatch == 0 {
            return Err(Error::Config("epochs and minibatch must be positive".into()));
        }
        Ok(())
    }
}

/// One sampled action: the raw Gaussian draw carries the log-probability,
/// the executed action is its clamp into [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub executed: [f64; ACTUATORS],
    pub raw: [f64; ACTUATORS],
    pub log_prob: f64,
}

/// Gaussian policy head over the action mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNetwork {
    pub net: Mlp,
    pub exploration_std: f64,
}

fn gaussian_log_prob(mean: &[f64], x: &[f64; ACTUATORS], std: f64) -> f64 {
    let var = std * std;
    let log_norm = std.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
    mean.iter()
        .zip(x)
        .map(|(m, v)| -((v - m) * (v - m)) / (2.0 * var) - log_norm)
        .sum()
}

impl PolicyNetwork {
    pub fn new(obs_dim: usize, hidden: &[usize], exploration_std: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(obs_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(ACTUATORS);
        Self { net: Mlp::new(&sizes, rng), exploration_std }
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn sample_action(&self, obs: &[f64], explore: bool, rng: &mut ChaCha8Rng) -> ActionSample {
        let mean = self.net.forward(obs);
        let mut raw = [0.0; ACTUATORS];
        for (r, m) in raw.iter_mut().zip(&mean) {
            let noise: f64 = if explore { rng.sample(StandardNormal) } else { 0.0 };
            *r = m + self.exploration_std * noise;
        }
        let log_prob = gaussian_log_prob(&mean, &raw, self.exploration_std);
        let mut executed = raw;
        for e in &mut executed {
            *e = e.clamp(-1.0, 1.0);
        }
        ActionSample { executed, raw, log_prob }
    }
}

impl Controller for PolicyNetwork {
    fn act(&self, obs: &[f64], explore: bool, rng: &mut ChaCha8Rng) -> ([f64; ACTUATORS], f64) {
        let sample = self.sample_action(obs, explore, rng);
        (sample.raw, sample.log_prob)
    }
}

/// Value head.
pub fn value_network(obs_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Mlp {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(obs_dim);
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    Mlp::new(&sizes, rng)
}

/// n-step return targets: the discounted reward sum over the next `n` steps
/// plus a discounted bootstrap from the value estimate n steps ahead. The
/// bootstrap is dropped where the episode ends first.
pub fn nstep_returns(rewards: &[f64], values: &[f64], n: usize, gamma: f64) -> Result<Vec<f64>> {
    if values.len() != rewards.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} rewards",
            values.len(),
            rewards.len()
        )));
    }
    let horizon = rewards.len();
    let mut targets = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut g = 0.0;
        let mut discount = 1.0;
        for i in 0..n.min(horizon - t) {
            g += discount * rewards[t + i];
            discount *= gamma;
        }
        if t + n < horizon {
            g += discount * values[t + n];
        }
        targets.push(g);
    }
    Ok(targets)
}

/// One flattened training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub raw_action: [f64; ACTUATORS],
    pub old_log_prob: f64,
    pub return_target: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoLossStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Fraction of transitions whose ratio left the clip region.
    pub clip_fraction: f64,
}

/// Mean clipped-surrogate actor loss and squared-error critic loss over one
/// batch, with parameter gradients accumulated into the provided buffers.
pub fn ppo_loss_and_grads(
    actor: &PolicyNetwork,
    critic: &Mlp,
    batch: &[&Transition],
    clip: f64,
    actor_grads: &mut [f64],
    critic_grads: &mut [f64],
) -> PpoLossStats {
    let mut actor_cache = actor.net.make_cache();
    let mut critic_cache = critic.make_cache();
    let count = batch.len() as f64;
    let var = actor.exploration_std * actor.exploration_std;
    let mut stats = PpoLossStats::default();
    let mut clipped = 0usize;
    let mut dmean = [0.0; ACTUATORS];
    for tr in batch {
        actor.net.forward_into(&tr.obs, &mut actor_cache);
        let mean = actor_cache.output();
        let log_prob = gaussian_log_prob(mean, &tr.raw_action, actor.exploration_std);
        let ratio = (log_prob - tr.old_log_prob).exp();
        let unclipped = ratio * tr.advantage;
        let clamped = ratio.clamp(1.0 - clip, 1.0 + clip) * tr.advantage;
        stats.actor_loss -= unclipped.min(clamped) / count;
        if (ratio - 1.0).abs() > clip {
            clipped += 1;
        }
        // The min picks the unclipped branch when it is not larger; the
        // clipped branch is constant in the parameters, so its gradient
        // vanishes.
        if unclipped <= clamped {
            let dlog_prob = -tr.advantage * ratio / count;
            for (d, (m, x)) in dmean.iter_mut().zip(mean.iter().zip(&tr.raw_action)) {
                *d = dlog_prob * (x - m) / var;
            }
            actor.net.backward(&mut actor_cache, &dmean, actor_grads);
        }

        critic.forward_into(&tr.obs, &mut critic_cache);
        let value = critic_cache.output()[0];
        let err = value - tr.return_target;
        stats.critic_loss += err * err / count;
        critic.backward(&mut critic_cache, &[2.0 * err / count], critic_grads);
    }
    stats.clip_fraction = clipped as f64 / count;
    stats
}

/// Averaged statistics of one update call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub clip_fraction: f64,
    pub learning_rate: f64,
}

/// Owns both networks, their optimizers and the simulation budget counters.
/// Inference may run concurrently against a cloned snapshot; updates are
/// exclusive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoTrainer {
    pub actor: PolicyNetwork,
    pub critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    pub cfg: TrainerConfig,
    pub simulations_seen: u64,
    pub updates_done: u64,
}

impl PpoTrainer {
    pub fn new(obs_dim: usize, cfg: TrainerConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let actor = PolicyNetwork::new(obs_dim, &cfg.hidden, cfg.exploration_std, rng);
        let critic = value_network(obs_dim, &cfg.hidden, rng);
        let actor_opt = Adam::new(actor.param_count());
        let critic_opt = Adam::new(critic.param_count());
        Ok(Self { actor, critic, actor_opt, critic_opt, cfg, simulations_seen: 0, updates_done: 0 })
    }

    pub fn record_simulations(&mut self, count: u64) {
        self.simulations_seen += count;
    }

    pub fn current_lr(&self) -> f64 {
        if self.simulations_seen < self.cfg.lr_decay_at_simulations {
            self.cfg.lr_initial
        } else {
            self.cfg.lr_final
        }
    }

    /// Flatten the trajectories into transitions with n-step targets and
    /// batch-normalized advantages, then run the configured epochs of
    /// minibatch updates.
    pub fn update(&mut self, trajectories: &[Trajectory], rng: &mut ChaCha8Rng) -> Result<UpdateStats> {
        let mut transitions = Vec::new();
        let mut value_cache = self.critic.make_cache();
        for traj in trajectories {
            if traj.is_empty() {
                continue;
            }
            let values: Vec<f64> = traj
                .observations
                .iter()
                .map(|o| {
                    self.critic.forward_into(o, &mut value_cache);
                    value_cache.output()[0]
                })
                .collect();
            let returns = nstep_returns(&traj.rewards, &values, self.cfg.nstep, self.cfg.gamma)?;
            for t in 0..traj.len() {
                transitions.push(Transition {
                    obs: traj.observations[t].clone(),
                    raw_action: traj.actions[t],
                    old_log_prob: traj.log_probs[t],
                    return_target: returns[t],
                    advantage: returns[t] - values[t],
                });
            }
        }
        if transitions.is_empty() {
            return Err(Error::Config("update needs a non-empty batch".into()));
        }
        let count = transitions.len() as f64;
        let mean = transitions.iter().map(|t| t.advantage).sum::<f64>() / count;
        let std = (transitions.iter().map(|t| (t.advantage - mean) * (t.advantage - mean)).sum::<f64>()
            / count)
            .sqrt();
        for t in &mut transitions {
            t.advantage = (t.advantage - mean) / (std + 1e-8);
        }

        let lr = self.current_lr();
        let mut actor_grads = vec![0.0; self.actor.param_count()];
        let mut critic_grads = vec![0.0; self.critic.param_count()];
        let mut totals = PpoLossStats::default();
        let mut minibatches = 0usize;
        let mut order: Vec<usize> = (0..transitions.len()).collect();
        for _ in 0..self.cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(self.cfg.minibatch) {
                actor_grads.iter_mut().for_each(|g| *g = 0.0);
                critic_grads.iter_mut().for_each(|g| *g = 0.0);
                let batch: Vec<&Transition> = chunk.iter().map(|&i| &transitions[i]).collect();
                let stats = ppo_loss_and_grads(
                    &self.actor,
                    &self.critic,
                    &batch,
                    self.cfg.clip,
                    &mut actor_grads,
                    &mut critic_grads,
                );
                if !stats.actor_loss.is_finite() || !stats.critic_loss.is_finite() {
                    return Err(Error::TrainingFault(format!(
                        "non-finite loss (actor {}, critic {})",
                        stats.actor_loss, stats.critic_loss
                    )));
                }
                self.actor_opt.step(self.actor.net.params_mut(), &actor_grads, lr);
                self.critic_opt.step(self.critic.params_mut(), &critic_grads, lr);
                totals.actor_loss += stats.actor_loss;
                totals.critic_loss += stats.critic_loss;
                totals.clip_fraction += stats.clip_fraction;
                minibatches += 1;
            }
        }
        self.updates_done += 1;
        let scale = minibatches as f64;
        Ok(UpdateStats {
            actor_loss: totals.actor_loss / scale,
            critic_loss: totals.critic_loss / scale,
            clip_fraction: totals.clip_fraction / scale,
            learning_rate: lr,
        })
    }
}

/// Result of comparing analytic gradients against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub parameter_count: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compare `analytic` against central finite differences (h = 1e-5) of
/// `loss` at `params`. The error is scaled by max(1, |analytic|, |numeric|)
/// so small gradients are judged absolutely.
pub fn gradient_check<F>(params: &[f64], mut loss: F, analytic: &[f64], tolerance: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let h = 1e-5;
    let mut work = params.to_vec();
    let mut max_relative_error = 0.0;
    let mut worst_index = 0;
    for i in 0..params.len() {
        work[i] = params[i] + h;
        let up = loss(&work);
        work[i] = params[i] - h;
        let down = loss(&work);
        work[i] = params[i];
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1.0);
        let err = (analytic[i] - numeric).abs() / denom;
        if err > max_relative_error {
            max_relative_error = err;
            worst_index = i;
        }
    }
    GradCheckReport {
        max_relative_error,
        worst_index,
        parameter_count: params.len(),
        tolerance,
        passed: max_relative_error < tolerance,
    }
}

/// Gradient-check the full PPO loss (actor surrogate + 0.5 * critic error)
/// on a random small instance.
pub fn ppo_gradient_check(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = crate::rng::stream(seed, &[crate::rng::TAG_EVAL]);
    let obs_dim = 5;
    let actor = PolicyNetwork::new(obs_dim, &[8, 8], 0.5, &mut rng);
    let critic = value_network(obs_dim, &[8], &mut rng);

    let batch: Vec<Transition> = (0..3)
        .map(|_| {
            let obs: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sample = actor.sample_action(&obs, true, &mut rng);
            Transition {
                obs,
                raw_action: sample.raw,
                // Jitter keeps ratios away from 1 and from the clip kinks.
                old_log_prob: sample.log_prob + rng.random_range(-0.15..0.15),
                return_target: rng.random_range(-1.0..1.0),
                advantage: rng.random_range(-1.0..1.0),
            }
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();

    let na = actor.param_count();
    let nc = critic.param_count();
    let mut params = Vec::with_capacity(na + nc);
    params.extend_from_slice(actor.net.params());
    params.extend_from_slice(critic.params());

    let mut actor_grads = vec![0.0; na];
    let mut critic_grads = vec![0.0; nc];
    let stats =
        ppo_loss_and_grads(&actor, &critic, &refs, 0.2, &mut actor_grads, &mut critic_grads);
    debug_assert!(stats.actor_loss.is_finite());
    let mut analytic = actor_grads;
    analytic.extend(critic_grads.iter().map(|g| 0.5 * g));

    let loss = |p: &[f64]| -> f64 {
        let mut a = actor.clone();
        let mut c = critic.clone();
        a.net.set_params(&p[..na]);
        c.set_params(&p[na..]);
        let mut ag = vec![0.0; na];
        let mut cg = vec![0.0; nc];
        let s = ppo_loss_and_grads(&a, &c, &refs, 0.2, &mut ag, &mut cg);
        s.actor_loss + 0.5 * s.critic_loss
    };
    gradient_check(&params, loss, &analytic, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::surrogate::OBS_DIM;

    #[test]
    fn deterministic_action_without_exploration() {
        let mut rng = stream(61, &[1]);
        let policy = PolicyNetwork::new(OBS_DIM, &[16], 0.5, &mut rng);
        let obs = vec![0.1; OBS_DIM];
        let a = policy.sample_action(&obs, false, &mut rng);
        let b = policy.sample_action(&obs, false, &mut rng);
        assert_eq!(a, b);
        assert!(a.log_prob.is_finite());
    }

    #[test]
    fn exploration_noise_has_the_configured_std() {
        let mut rng = stream(61, &[2]);
        let policy = PolicyNetwork::new(OBS_DIM, &[16], 0.5, &mut rng);
        let obs = vec![0.0; OBS_DIM];
        let mean = policy.net.forward(&obs);
        let trials = 10_000;
        let mut sq = [0.0f64; ACTUATORS];
        for _ in 0..trials {
            let s = policy.sample_action(&obs, true, &mut rng);
            for (acc, (raw, m)) in sq.iter_mut().zip(s.raw.iter().zip(&mean)) {
                *acc += (raw - m) * (raw - m);
            }
        }
        for acc in sq {
            let std = (acc / trials as f64).sqrt();
            assert!((std - 0.5).abs() < 0.05, "per-dimension noise std {std}");
        }
    }

    #[test]
    fn executed_actions_are_clamped() {
        let mut rng = stream(61, &[3]);
        let policy = PolicyNetwork::new(OBS_DIM, &[16], 2.0, &mut rng);
        let obs = vec![0.5; OBS_DIM];
        for _ in 0..500 {
            let s = policy.sample_action(&obs, true, &mut rng);
            assert!(s.executed.iter().all(|a| (-1.0..=1.0).contains(a)));
            assert!(s.log_prob.is_finite());
        }
    }

    #[test]
    fn nstep_return_base_cases() {
        let zeros = nstep_returns(&[0.0; 6], &[0.0; 6], 4, 0.99).unwrap();
        assert_eq!(zeros, vec![0.0; 6]);

        let rewards = vec![1.0; 10];
        let values = vec![0.0; 10];
        let targets = nstep_returns(&rewards, &values, 4, 1.0).unwrap();
        assert_eq!(targets[3], 4.0);
        // Tail truncates: the last step sums a single reward.
        assert_eq!(targets[9], 1.0);
        assert_eq!(targets[7], 3.0);
    }

    #[test]
    fn nstep_returns_match_direct_summation() {
        let mut rng = stream(61, &[4]);
        let rewards: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (n, gamma) = (4, 0.99);
        let got = nstep_returns(&rewards, &values, n, gamma).unwrap();
        for t in 0..12 {
            let mut want = 0.0;
            for i in 0..n {
                if t + i < 12 {
                    want += gamma.powi(i as i32) * rewards[t + i];
                }
            }
            if t + n < 12 {
                want += gamma.powi(n as i32) * values[t + n];
            }
            assert!((got[t] - want).abs() < 1e-12, "t={t}: {} vs {want}", got[t]);
        }
    }

    fn tiny_instance(seed: u64) -> (PolicyNetwork, Mlp, Vec<Transition>) {
        let mut rng = stream(seed, &[5]);
        let actor = PolicyNetwork::new(4, &[6], 0.5, &mut rng);
        let critic = value_network(4, &[6], &mut rng);
        let batch: Vec<Transition> = (0..4)
            .map(|_| {
                let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = actor.sample_action(&obs, true, &mut rng);
                Transition {
                    obs,
                    raw_action: s.raw,
                    old_log_prob: s.log_prob,
                    return_target: rng.random_range(-1.0..1.0),
                    advantage: rng.random_range(-1.0..1.0),
                }
            })
            .collect();
        (actor, critic, batch)
    }

    #[test]
    fn unit_ratio_surrogate_equals_mean_advantage() {
        let (actor, critic, batch) = tiny_instance(62);
        let refs: Vec<&Transition> = batch.iter().collect();
        let mut ag = vec![0.0; actor.param_count()];
        let mut cg = vec![0.0; critic.param_count()];
        // old_log_prob came from the same parameters, so every ratio is 1.
        let stats = ppo_loss_and_grads(&actor, &critic, &refs, 0.2, &mut ag, &mut cg);
        let mean_adv = batch.iter().map(|t| t.advantage).sum::<f64>() / batch.len() as f64;
        assert!((stats.actor_loss - (-mean_adv)).abs() < 1e-12);
        assert_eq!(stats.clip_fraction, 0.0);
    }

    #[test]
    fn positive_advantage_beyond_clip_has_zero_actor_gradient() {
        let (actor, critic, mut batch) = tiny_instance(63);
        batch.truncate(1);
        batch[0].advantage = 1.0;
        // ratio = exp(lp_new - old) = 1 + 2 * clip.
        batch[0].old_log_prob -= (1.0 + 2.0 * 0.2f64).ln();
        let refs: Vec<&Transition> = batch.iter().collect();
        let mut ag = vec![0.0; actor.param_count()];
        let mut cg = vec![0.0; critic.param_count()];
        let stats = ppo_loss_and_grads(&actor, &critic, &refs, 0.2, &mut ag, &mut cg);
        assert!(ag.iter().all(|g| *g == 0.0), "clipped branch must cut the actor gradient");
        assert_eq!(stats.clip_fraction, 1.0);
        // The surrogate value is the clipped branch.
        assert!((stats.actor_loss - (-(1.2))).abs() < 1e-9);
    }

    #[test]
    fn zero_loss_batch_has_zero_gradients() {
        let (actor, critic, mut batch) = tiny_instance(64);
        for t in &mut batch {
            t.advantage = 0.0;
            t.return_target = critic.forward(&t.obs)[0];
        }
        let refs: Vec<&Transition> = batch.iter().collect();
        let mut ag = vec![0.0; actor.param_count()];
        let mut cg = vec![0.0; critic.param_count()];
        let stats = ppo_loss_and_grads(&actor, &critic, &refs, 0.2, &mut ag, &mut cg);
        assert_eq!(stats.actor_loss, 0.0);
        assert_eq!(stats.critic_loss, 0.0);
        assert!(ag.iter().all(|g| *g == 0.0));
        assert!(cg.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn ppo_loss_gradients_match_finite_differences() {
        for seed in [70, 71, 72] {
            let report = ppo_gradient_check(seed, 1e-4);
            assert!(
                report.passed,
                "seed {seed}: max relative error {} at parameter {}",
                report.max_relative_error, report.worst_index
            );
        }
    }

    #[test]
    fn zero_learning_rate_update_is_a_noop() {
        let mut rng = stream(65, &[6]);
        let cfg = TrainerConfig {
            hidden: vec![8],
            lr_initial: 0.0,
            lr_final: 0.0,
            minibatch: 16,
            ..TrainerConfig::default()
        };
        let mut trainer = PpoTrainer::new(OBS_DIM, cfg, &mut rng).unwrap();
        let before_actor = trainer.actor.net.params().to_vec();
        let before_critic = trainer.critic.params().to_vec();
        let traj = synthetic_trajectory(&trainer.actor, 30, &mut rng);
        trainer.update(&[traj], &mut rng).unwrap();
        assert_eq!(trainer.actor.net.params(), &before_actor[..]);
        assert_eq!(trainer.critic.params(), &before_critic[..]);
    }

    fn synthetic_trajectory(policy: &PolicyNetwork, steps: usize, rng: &mut ChaCha8Rng) -> Trajectory {
        use crate::command::Command;
        use crate::reward::RewardConfig;
        use crate::surrogate::{simulate_command, Scenario};
        simulate_command(
            policy,
            Command::new(0.4, 0.1, -0.2),
            &Scenario::Nominal.spec(),
            steps,
            &RewardConfig::default(),
            true,
            rng,
        )
        .unwrap()
    }

    #[test]
    fn training_is_reproducible_bit_for_bit() {
        let run = || {
            let mut rng = stream(66, &[7]);
            let cfg = TrainerConfig { hidden: vec![16], minibatch: 32, ..TrainerConfig::default() };
            let mut trainer = PpoTrainer::new(OBS_DIM, cfg, &mut rng).unwrap();
            for _ in 0..3 {
                let traj = synthetic_trajectory(&trainer.actor, 40, &mut rng);
                trainer.record_simulations(1);
                trainer.update(&[traj], &mut rng).unwrap();
            }
            trainer.actor.net.params().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn learning_rate_decays_with_the_simulation_budget() {
        let mut rng = stream(67, &[8]);
        let cfg = TrainerConfig { lr_decay_at_simulations: 100, ..TrainerConfig::default() };
        let mut trainer = PpoTrainer::new(OBS_DIM, cfg, &mut rng).unwrap();
        assert_eq!(trainer.current_lr(), 3e-4);
        trainer.record_simulations(99);
        assert_eq!(trainer.current_lr(), 3e-4);
        trainer.record_simulations(1);
        assert_eq!(trainer.current_lr(), 1e-4);
    }

    #[test]
    fn trainer_state_round_trips_through_serde() {
        let mut rng = stream(68, &[9]);
        let cfg = TrainerConfig { hidden: vec![8], minibatch: 16, ..TrainerConfig::default() };
        let mut trainer = PpoTrainer::new(OBS_DIM, cfg, &mut rng).unwrap();
        let traj = synthetic_trajectory(&trainer.actor, 20, &mut rng);
        trainer.update(&[traj], &mut rng).unwrap();

        let json = serde_json::to_string(&trainer).unwrap();
        let mut restored: PpoTrainer = serde_json::from_str(&json).unwrap();

        let mut rng_a = stream(68, &[10]);
        let mut rng_b = stream(68, &[10]);
        let traj_a = synthetic_trajectory(&trainer.actor, 20, &mut rng_a);
        let traj_b = synthetic_trajectory(&restored.actor, 20, &mut rng_b);
        assert_eq!(traj_a, traj_b);
        trainer.update(&[traj_a], &mut rng_a).unwrap();
        restored.update(&[traj_b], &mut rng_b).unwrap();
        assert_eq!(trainer.actor.net.params(), restored.actor.net.params());
        assert_eq!(trainer.critic.params(), restored.critic.params());
    }
}
