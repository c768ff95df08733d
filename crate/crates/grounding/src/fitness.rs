//! True fitness: the expected reproduction rate an agent actually has,
//! as opposed to what it believes it has. A Gaussian mismatch kernel over
//! relevant channels, logistic crowding, and a gated danger penalty.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::Genome;
use crate::rng::Stream;
use crate::world::{EnvironmentState, WorldConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueFitnessConfig {
    /// Maximum reproduction rate (births per unit time).
    pub r_max: f64,
    /// Mismatch weight per relevant channel; zero weight makes a channel
    /// irrelevant to true fitness even though it is still sensed.
    pub true_weights: Vec<f64>,
    /// Width of the mismatch kernel.
    pub width: f64,
    /// Carrying capacity. May be infinite to disable crowding.
    pub capacity: f64,
    /// Death rate (deaths per unit time).
    pub death_rate: f64,
    /// Danger penalty applies while the hazard channel exceeds this level.
    /// Infinite by default: no penalty.
    #[serde(default = "default_hazard_threshold")]
    pub hazard_threshold: f64,
    /// Multiplier applied to fitness during danger, in [0, 1].
    #[serde(default = "default_hazard_penalty")]
    pub hazard_penalty: f64,
    /// The penalty only hits agents whose exposure trait exceeds this.
    #[serde(default)]
    pub exposure_safe: f64,
}

fn default_hazard_threshold() -> f64 {
    f64::INFINITY
}

fn default_hazard_penalty() -> f64 {
    1.0
}

/// Fraction of the reproductive rate left after crowding: max(0, 1 - N/K).
pub fn resource_factor(n: usize, capacity: f64) -> f64 {
    (1.0 - n as f64 / capacity).max(0.0)
}

/// Expected reproduction rate of one agent right now. Irrelevant channels
/// never enter this computation; that is what makes them irrelevant.
pub fn true_fitness(
    genome: &Genome,
    env: &EnvironmentState,
    n: usize,
    cfg: &TrueFitnessConfig,
    world: &WorldConfig,
) -> f64 {
    let mut mismatch = 0.0;
    for (j, (&u, &e)) in cfg.true_weights.iter().zip(&env.relevant).enumerate() {
        let d = genome.traits[j] - e;
        mismatch += u * d * d;
    }
    let kernel = (-mismatch / (2.0 * cfg.width * cfg.width)).exp();
    let penalty = if env.hazard(world) > cfg.hazard_threshold && genome.exposure() > cfg.exposure_safe
    {
        cfg.hazard_penalty
    } else {
        1.0
    };
    cfg.r_max * kernel * resource_factor(n, cfg.capacity) * penalty
}

/// One death draw: true with probability min(1, death_rate * dt).
pub fn death_event(cfg: &TrueFitnessConfig, dt: f64, rng: &mut Stream) -> bool {
    let p = (cfg.death_rate * dt).min(1.0);
    if p <= 0.0 {
        return false;
    }
    if p >= 1.0 {
        return true;
    }
    rng.random::<f64>() < p
}
