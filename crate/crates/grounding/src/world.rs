//! The environment: mean-reverting diffusion channels with occasional
//! uniform jump shocks. Relevant channels feed true fitness; irrelevant
//! channels exist only to be (mis)read by estimators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::Stream;

/// Dynamics shared by a group of channels. `means` optionally overrides the
/// broadcast `mean` per channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDynamics {
    /// Mean-reversion rate kappa (per unit time).
    #[serde(default)]
    pub kappa: f64,
    /// Long-run mean, broadcast to every channel in the group.
    #[serde(default)]
    pub mean: f64,
    /// Per-channel long-run means; overrides `mean` when present.
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    /// Diffusion scale (per sqrt unit time).
    #[serde(default)]
    pub sigma: f64,
    /// Probability per channel per step of a jump shock.
    #[serde(default)]
    pub jump_prob: f64,
    /// Jumps resample the channel uniformly on [-jump_range, jump_range].
    #[serde(default = "default_jump_range")]
    pub jump_range: f64,
}

fn default_jump_range() -> f64 {
    1.0
}

impl Default for GroupDynamics {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            mean: 0.0,
            means: None,
            sigma: 0.0,
            jump_prob: 0.0,
            jump_range: default_jump_range(),
        }
    }
}

impl GroupDynamics {
    pub fn mean_of(&self, channel: usize) -> f64 {
        match &self.means {
            Some(m) => m[channel],
            None => self.mean,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// Number of relevant channels (the e_j).
    pub m_e: usize,
    /// Number of irrelevant channels (the i_j).
    pub m_i: usize,
    /// Timestep; all rates in the scenario are per unit time.
    pub dt: f64,
    /// Which relevant channel is the danger intensity.
    #[serde(default)]
    pub hazard_index: usize,
    /// Std. dev. of per-role perturbation applied to shared contexts.
    #[serde(default)]
    pub context_noise: f64,
    #[serde(default)]
    pub relevant: GroupDynamics,
    #[serde(default)]
    pub irrelevant: GroupDynamics,
    /// Optional override of the hazard channel's dynamics.
    #[serde(default)]
    pub hazard: Option<GroupDynamics>,
}

impl WorldConfig {
    /// Initial channel values: every channel starts at its long-run mean.
    pub fn initial_state(&self) -> EnvironmentState {
        let relevant = (0..self.m_e).map(|j| self.channel_dynamics(j).mean_of_channel(j)).collect();
        let irrelevant = (0..self.m_i).map(|j| self.irrelevant.mean_of(j)).collect();
        EnvironmentState { step: 0, relevant, irrelevant }
    }

    fn channel_dynamics(&self, relevant_channel: usize) -> ChannelView<'_> {
        if relevant_channel == self.hazard_index {
            if let Some(h) = &self.hazard {
                return ChannelView { dyn_: h, index_in_group: 0 };
            }
        }
        ChannelView { dyn_: &self.relevant, index_in_group: relevant_channel }
    }
}

struct ChannelView<'a> {
    dyn_: &'a GroupDynamics,
    index_in_group: usize,
}

impl ChannelView<'_> {
    fn mean_of_channel(&self, _channel: usize) -> f64 {
        self.dyn_.mean_of(self.index_in_group)
    }
}

/// Snapshot of every channel at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentState {
    pub step: u64,
    pub relevant: Vec<f64>,
    pub irrelevant: Vec<f64>,
}

impl EnvironmentState {
    /// Danger intensity: the designated relevant channel, floored at zero.
    pub fn hazard(&self, cfg: &WorldConfig) -> f64 {
        self.relevant[cfg.hazard_index].max(0.0)
    }

    /// All channel values, relevant first. This fixed layout is the contract
    /// sensors and symbols rely on.
    pub fn channels(&self) -> impl Iterator<Item = f64> + '_ {
        self.relevant.iter().chain(self.irrelevant.iter()).copied()
    }
}

fn step_channel(value: f64, d: &GroupDynamics, channel: usize, dt: f64, rng: &mut Stream) -> f64 {
    let eta: f64 = rng.sample(StandardNormal);
    let mut v = value + d.kappa * (d.mean_of(channel) - value) * dt + d.sigma * dt.sqrt() * eta;
    if d.jump_prob > 0.0 && rng.random::<f64>() < d.jump_prob {
        v = rng.random_range(-d.jump_range..=d.jump_range);
    }
    v
}

/// Advance every channel one step: mean-reverting diffusion, then an
/// optional jump shock, channel by channel in layout order.
pub fn step_environment(env: &EnvironmentState, cfg: &WorldConfig, rng: &mut Stream) -> EnvironmentState {
    let relevant = env
        .relevant
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let view = cfg.channel_dynamics(j);
            step_channel(v, view.dyn_, view.index_in_group, cfg.dt, rng)
        })
        .collect();
    let irrelevant = env
        .irrelevant
        .iter()
        .enumerate()
        .map(|(j, &v)| step_channel(v, &cfg.irrelevant, j, cfg.dt, rng))
        .collect();
    EnvironmentState { step: env.step + 1, relevant, irrelevant }
}

/// A shared context for a communication game: the true channel values plus
/// one perturbed view per role.
#[derive(Debug, Clone)]
pub struct ContextSample {
    pub shared: Vec<f64>,
    pub speaker_view: Vec<f64>,
    pub hearer_view: Vec<f64>,
}

/// Snapshot the environment for a speaker/hearer pair. With zero
/// `context_noise` both views equal the true values.
pub fn sample_context(env: &EnvironmentState, cfg: &WorldConfig, rng: &mut Stream) -> ContextSample {
    let shared: Vec<f64> = env.channels().collect();
    let perturb = |rng: &mut Stream, base: &[f64]| -> Vec<f64> {
        if cfg.context_noise == 0.0 {
            base.to_vec()
        } else {
            base.iter()
                .map(|&v| v + cfg.context_noise * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    };
    let speaker_view = perturb(rng, &shared);
    let hearer_view = perturb(rng, &shared);
    ContextSample { shared, speaker_view, hearer_view }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};

    fn base_cfg() -> WorldConfig {
        WorldConfig {
            m_e: 2,
            m_i: 1,
            dt: 1.0,
            hazard_index: 0,
            context_noise: 0.0,
            relevant: GroupDynamics::default(),
            irrelevant: GroupDynamics::default(),
            hazard: None,
        }
    }

    #[test]
    fn zero_noise_zero_reversion_is_identity_drift() {
        let cfg = base_cfg();
        let env = EnvironmentState { step: 3, relevant: vec![0.4, -1.2], irrelevant: vec![2.0] };
        let mut rng = substream(1, Domain::World, 0, 3);
        let next = step_environment(&env, &cfg, &mut rng);
        assert_eq!(next.relevant, env.relevant);
        assert_eq!(next.irrelevant, env.irrelevant);
        assert_eq!(next.step, 4);
    }

    #[test]
    fn full_reversion_in_one_step() {
        let mut cfg = base_cfg();
        cfg.relevant.kappa = 1.0;
        let env = EnvironmentState { step: 0, relevant: vec![2.0, 2.0], irrelevant: vec![0.0] };
        let mut rng = substream(1, Domain::World, 0, 0);
        let next = step_environment(&env, &cfg, &mut rng);
        assert_eq!(next.relevant, vec![0.0, 0.0]);
    }

    #[test]
    fn deterministic_given_key() {
        let mut cfg = base_cfg();
        cfg.relevant.sigma = 0.3;
        cfg.relevant.jump_prob = 0.2;
        let env = base_cfg().initial_state();
        let a = step_environment(&env, &cfg, &mut substream(9, Domain::World, 0, 0));
        let b = step_environment(&env, &cfg, &mut substream(9, Domain::World, 0, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_reversion_toward_mean_without_noise() {
        let mut cfg = base_cfg();
        cfg.relevant.kappa = 0.3;
        cfg.relevant.mean = 1.0;
        let mut env = EnvironmentState { step: 0, relevant: vec![5.0, -3.0], irrelevant: vec![0.0] };
        let mut prev_gap: Vec<f64> = env.relevant.iter().map(|v| (v - 1.0).abs()).collect();
        for s in 0..50 {
            env = step_environment(&env, &cfg, &mut substream(2, Domain::World, 0, s));
            let gap: Vec<f64> = env.relevant.iter().map(|v| (v - 1.0).abs()).collect();
            for (g, p) in gap.iter().zip(&prev_gap) {
                assert!(g <= p);
            }
            prev_gap = gap;
        }
    }

    // Random-walk variance oracle: with kappa=0 and no jumps, Var[e_T] =
    // sigma^2 * T * dt.
    #[test]
    fn diffusion_variance_matches_random_walk() {
        let mut cfg = base_cfg();
        cfg.m_e = 1;
        cfg.m_i = 0;
        cfg.relevant.sigma = 0.1;
        let steps = 10;
        let replicas = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for r in 0..replicas {
            let mut env = EnvironmentState { step: 0, relevant: vec![0.0], irrelevant: vec![] };
            for s in 0..steps {
                env = step_environment(&env, &cfg, &mut substream(r, Domain::World, 0, s));
            }
            sum += env.relevant[0];
            sumsq += env.relevant[0] * env.relevant[0];
        }
        let n = replicas as f64;
        let var = sumsq / n - (sum / n) * (sum / n);
        let expected = 0.01 * steps as f64 * cfg.dt;
        assert!(
            (var - expected).abs() / expected < 0.05,
            "empirical variance {var} vs expected {expected}"
        );
    }

    #[test]
    fn jump_rate_matches_probability() {
        let mut cfg = base_cfg();
        cfg.m_e = 1;
        cfg.m_i = 0;
        cfg.relevant.jump_prob = 0.05;
        cfg.relevant.jump_range = 100.0;
        // With a huge jump range and no other dynamics, a change in value
        // marks a jump almost surely.
        let steps = 200_000u64;
        let mut env = EnvironmentState { step: 0, relevant: vec![0.0], irrelevant: vec![] };
        let mut jumps = 0u64;
        for s in 0..steps {
            let next = step_environment(&env, &cfg, &mut substream(5, Domain::World, 0, s));
            if next.relevant[0] != env.relevant[0] {
                jumps += 1;
            }
            env = next;
        }
        let p_hat = jumps as f64 / steps as f64;
        let se = (0.05 * 0.95 / steps as f64).sqrt();
        assert!(
            (p_hat - 0.05).abs() < 3.0 * se,
            "jump rate {p_hat} outside 0.05 +/- {}",
            3.0 * se
        );
    }

    #[test]
    fn context_views_equal_env_without_perturbation() {
        let cfg = base_cfg();
        let env = EnvironmentState { step: 0, relevant: vec![0.7, 0.1], irrelevant: vec![-0.2] };
        let ctx = sample_context(&env, &cfg, &mut substream(1, Domain::Context, 0, 0));
        assert_eq!(ctx.shared, vec![0.7, 0.1, -0.2]);
        assert_eq!(ctx.speaker_view, ctx.shared);
        assert_eq!(ctx.hearer_view, ctx.shared);
    }

    // Monte Carlo oracle: each view adds independent N(0, s_c^2) noise per
    // channel, so E[(speaker - hearer)^2] = 2 * s_c^2.
    #[test]
    fn context_perturbation_mse_matches() {
        let mut cfg = base_cfg();
        cfg.context_noise = 0.05;
        let env = cfg.initial_state();
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..100_000u64 {
            let ctx = sample_context(&env, &cfg, &mut substream(3, Domain::Context, r, 0));
            for (s, h) in ctx.speaker_view.iter().zip(&ctx.hearer_view) {
                sum += (s - h) * (s - h);
                count += 1;
            }
        }
        let mse = sum / count as f64;
        let expected = 2.0 * 0.05 * 0.05;
        assert!((mse - expected).abs() / expected < 0.05, "mse {mse} vs {expected}");
    }
}
