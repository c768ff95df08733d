//! Variance-modulated structural change: the goal-directed loop's
//! mechanism. An estimate of fitness sets the standard deviation of
//! random change, inversely: comfortable agents barely change, desperate
//! agents search hard. Applied hereditarily at reproduction and within a
//! lifetime as a trait walk.
//!
//! Everything here is driven by the agent's internal estimate only. No
//! operation in this module takes or reads true fitness; the acceptance
//! suite checks that at the source level.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::estimator::Genome;
use crate::rng::Stream;

const MIN_WIDTH: f64 = 1e-6;
const MIN_EPSILON: f64 = 1e-9;

/// Parameters of the estimate-to-variance law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationParams {
    /// Scale constant for hereditary change.
    pub c_gen: f64,
    /// Scale constant for within-lifetime change.
    pub c_learn: f64,
    /// Lower clamp on the produced standard deviation.
    pub sigma_min: f64,
    /// Upper clamp on the produced standard deviation.
    pub sigma_max: f64,
    /// Regularizer keeping the law finite at zero estimate.
    pub epsilon: f64,
}

/// Which channel of change a sigma is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationKind {
    Hereditary,
    Lifetime,
}

/// The inverse law: sigma = clamp(c / (estimate + epsilon)).
/// Non-increasing in the estimate, always within the clamp bounds.
pub fn modulation_sigma(estimate: f64, params: &ModulationParams, kind: VariationKind) -> f64 {
    let c = match kind {
        VariationKind::Hereditary => params.c_gen,
        VariationKind::Lifetime => params.c_learn,
    };
    (c / (estimate + params.epsilon)).clamp(params.sigma_min, params.sigma_max)
}

/// Which genome fields variation may touch. Scenarios isolate fields by
/// turning flags off; disabled fields are copied verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveFlags {
    pub traits: bool,
    pub est_weights: bool,
    pub est_width: bool,
    pub mod_params: bool,
    pub symbol: bool,
    pub goal: bool,
}

impl Default for EvolveFlags {
    fn default() -> Self {
        Self {
            traits: true,
            est_weights: true,
            est_width: false,
            mod_params: false,
            symbol: false,
            goal: false,
        }
    }
}

/// Mutate a parent genome with an already-resolved sigma: every enabled
/// real field gets independent Gaussian noise of that scale, then fields
/// with invariant ranges are clamped back into them.
pub fn mutate_genome_with_sigma(
    parent: &Genome,
    sigma: f64,
    flags: &EvolveFlags,
    rng: &mut Stream,
) -> Genome {
    let mut child = parent.clone();
    if sigma == 0.0 {
        return child;
    }
    let bump = |rng: &mut Stream| sigma * rng.sample::<f64, _>(StandardNormal);

    if flags.traits {
        for t in &mut child.traits {
            *t += bump(rng);
        }
        // The exposure trait stays non-negative.
        let e = child.exposure().max(0.0);
        child.set_exposure(e);
    }
    if flags.est_weights {
        for w in &mut child.est_weights {
            *w = (*w + bump(rng)).max(0.0);
        }
    }
    if flags.est_width {
        child.est_width = (child.est_width + bump(rng)).max(MIN_WIDTH);
    }
    if flags.mod_params {
        let m = &mut child.modulation;
        m.c_gen = (m.c_gen + bump(rng)).max(0.0);
        m.c_learn = (m.c_learn + bump(rng)).max(0.0);
        m.sigma_min = (m.sigma_min + bump(rng)).max(0.0);
        m.sigma_max = (m.sigma_max + bump(rng)).max(m.sigma_min);
        m.epsilon = (m.epsilon + bump(rng)).max(MIN_EPSILON);
    }
    if flags.symbol {
        for w in &mut child.symbol.weights {
            *w += bump(rng);
        }
        child.symbol.threshold += bump(rng);
    }
    if flags.goal {
        if let Some(goal) = &mut child.goal {
            goal.target += bump(rng);
            goal.width = (goal.width + bump(rng)).max(MIN_WIDTH);
        }
    }
    child
}

/// Mutation at reproduction, with the hereditary sigma resolved from the
/// parent's current fitness estimate through the parent's own law.
pub fn mutate_genome(
    parent: &Genome,
    f_est_parent: f64,
    flags: &EvolveFlags,
    rng: &mut Stream,
) -> Genome {
    let sigma = modulation_sigma(f_est_parent, &parent.modulation, VariationKind::Hereditary);
    mutate_genome_with_sigma(parent, sigma, flags, rng)
}

/// Within-lifetime walk on the designated behavioral traits:
/// a += sigma * sqrt(dt) * eta. There is no selection step here; any
/// stabilization emerges from the sigma law alone.
pub fn learn_traits(
    genome: &mut Genome,
    sigma: f64,
    learnable: &[usize],
    dt: f64,
    rng: &mut Stream,
) {
    if sigma == 0.0 {
        return;
    }
    let scale = sigma * dt.sqrt();
    for &i in learnable {
        genome.traits[i] += scale * rng.sample::<f64, _>(StandardNormal);
    }
}
