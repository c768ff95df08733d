//! Each agent's internal fitness estimate and the metrics that quantify
//! how well that estimate refers to true fitness.
//!
//! The estimator shares the Gaussian-kernel family of the true fitness
//! process, so every structural error is expressible through its weights:
//! a zero weight on a truly relevant channel is a missed reference, a
//! positive weight on an irrelevant channel is an erroneous one. The
//! estimate deliberately omits the crowding factor, which bakes one missed
//! reference into every default scenario.

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::rng::Stream;
use crate::stats::{pearson, Correlation, StatError};
use crate::symbols::Symbol;
use crate::variation::ModulationParams;
use crate::world::EnvironmentState;

/// Parameters of a substituted goal: a Gaussian preference for one trait
/// sitting at `target`, used instead of the fitness estimate in goal
/// substitution variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalParams {
    pub target: f64,
    pub width: f64,
    pub trait_index: usize,
}

/// Heritable structure of one agent.
///
/// Trait layout: entries `[0, m_e)` track the relevant channels, entries
/// `[m_e, m_e + m_i)` are spare traits paired with irrelevant channels,
/// and the final entry is the exposure trait the danger penalty gates on.
/// `est_weights` covers all sensed channels, relevant first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub traits: Vec<f64>,
    pub est_weights: Vec<f64>,
    pub est_width: f64,
    pub modulation: ModulationParams,
    pub symbol: Symbol,
    pub goal: Option<GoalParams>,
}

impl Genome {
    /// The exposure trait: the last entry of the trait vector.
    pub fn exposure(&self) -> f64 {
        *self.traits.last().expect("genome has at least the exposure trait")
    }

    pub fn exposure_index(&self) -> usize {
        self.traits.len() - 1
    }

    pub fn set_exposure(&mut self, value: f64) {
        let i = self.exposure_index();
        self.traits[i] = value;
    }

    /// Number of sensed channels this genome estimates over.
    pub fn channel_count(&self) -> usize {
        self.est_weights.len()
    }

    /// The substituted goal signal, when goal parameters are present:
    /// r_max * exp(-(a_k - target)^2 / (2 width^2)).
    pub fn goal_signal(&self, r_max: f64) -> Option<f64> {
        self.goal.as_ref().map(|g| {
            let d = self.traits[g.trait_index] - g.target;
            r_max * (-d * d / (2.0 * g.width * g.width)).exp()
        })
    }
}

/// Noisy readings of every channel, relevant first, irrelevant after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensedVector {
    pub values: Vec<f64>,
}

impl SensedVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Sample every channel through the agent's sensors: channel value plus
/// independent Gaussian noise of scale `sensor_noise`.
pub fn sense(env: &EnvironmentState, sensor_noise: f64, rng: &mut Stream) -> SensedVector {
    let values = env
        .channels()
        .map(|v| {
            if sensor_noise == 0.0 {
                v
            } else {
                v + sensor_noise * rng.sample::<f64, _>(StandardNormal)
            }
        })
        .collect();
    SensedVector { values }
}

/// The agent's own estimate of its reproduction rate. Each sensed channel
/// is paired with the trait of the same index (spare traits for the
/// irrelevant channels), and weighted mismatch feeds a Gaussian kernel.
/// The crowding factor is intentionally absent.
pub fn estimate_fitness(genome: &Genome, sensed: &SensedVector, r_max: f64) -> f64 {
    debug_assert_eq!(genome.est_weights.len(), sensed.values.len());
    let mut mismatch = 0.0;
    for (j, (&v, &s)) in genome.est_weights.iter().zip(&sensed.values).enumerate() {
        let d = genome.traits[j] - s;
        mismatch += v * d * d;
    }
    r_max * (-mismatch / (2.0 * genome.est_width * genome.est_width)).exp()
}

/// Pearson correlation between estimated and true fitness over paired
/// samples: the value side of aboutness.
pub fn value_aboutness(paired: &[(f64, f64)]) -> Result<Correlation, StatError> {
    pearson(paired)
}

/// Support-level comparison of the estimator's weights against the true
/// weights: which relevant channels the estimator missed, and which
/// irrelevant channels it erroneously references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralAboutness {
    pub recall: f64,
    pub precision: f64,
    pub missed: Vec<usize>,
    pub erroneous: Vec<usize>,
}

/// Value and structure of the reference relation, bundled for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct AboutnessReport {
    pub value_corr: Correlation,
    pub structure: StructuralAboutness,
}

/// Compare estimator support `{j : v_j >= threshold}` against true support
/// `{relevant j : u_j > 0}`. Precision is defined as 1 when the estimated
/// support is empty.
pub fn structural_aboutness(
    genome: &Genome,
    true_weights: &[f64],
    support_threshold: f64,
) -> StructuralAboutness {
    let m_e = true_weights.len();
    let estimated: Vec<usize> = genome
        .est_weights
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= support_threshold)
        .map(|(j, _)| j)
        .collect();
    let true_support: Vec<usize> =
        true_weights.iter().enumerate().filter(|(_, &u)| u > 0.0).map(|(j, _)| j).collect();

    let hits = true_support.iter().filter(|j| estimated.contains(j)).count();
    let recall = if true_support.is_empty() { 1.0 } else { hits as f64 / true_support.len() as f64 };
    let precision = if estimated.is_empty() { 1.0 } else { hits as f64 / estimated.len() as f64 };

    let missed = true_support.iter().copied().filter(|j| !estimated.contains(j)).collect();
    let erroneous = estimated.into_iter().filter(|&j| j >= m_e).collect();
    StructuralAboutness { recall, precision, missed, erroneous }
}
