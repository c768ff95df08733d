//! A deterministic, seedable agent-based simulator built around two
//! coupled loops: a reproductive loop in which true fitness is realized
//! stochastically as births and deaths, and a goal-directed loop in which
//! each agent's own estimate of its fitness modulates the variance of
//! random structural change. On top sit quantitative aboutness metrics
//! (how well the estimate refers to the truth) and a layer of threshold
//! symbols aligned across agents by communication games.
//!
//! Start with [`scenario::load_scenario`] to read a run configuration,
//! [`population::run_simulation`] to produce a metrics series, and the
//! [`experiment`] module for paired-seed comparisons. The accompanying
//! guide in `book/` walks through the concepts; its code snippets are
//! compiled and run as doc-tests via the [`guide`] module.

pub mod estimator;
pub mod experiment;
pub mod fitness;
pub mod metrics;
pub mod population;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod symbols;
pub mod variation;
pub mod world;

pub mod guide;

pub use estimator::{Genome, SensedVector};
pub use metrics::{MetricsRow, MetricsSeries};
pub use population::{run_simulation, Agent, Population};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use world::EnvironmentState;

/// Plain genome builders for tests and examples.
#[doc(hidden)]
pub mod test_support {
    use crate::estimator::Genome;
    use crate::symbols::Symbol;
    use crate::variation::ModulationParams;

    fn default_modulation() -> ModulationParams {
        ModulationParams { c_gen: 0.1, c_learn: 0.1, sigma_min: 0.01, sigma_max: 1.0, epsilon: 1e-6 }
    }

    /// A genome with the given trait vector (length m_e + m_i + 1) and
    /// zeroed estimator weights.
    pub fn genome_with_traits(traits: Vec<f64>, m_e: usize, m_i: usize) -> Genome {
        let channels = m_e + m_i;
        assert_eq!(traits.len(), channels + 1);
        Genome {
            traits,
            est_weights: vec![0.0; channels],
            est_width: 0.5,
            modulation: default_modulation(),
            symbol: Symbol { weights: vec![0.0; channels], threshold: 0.5 },
            goal: None,
        }
    }

    /// A genome with the given estimator weights (length m_e + m_i) and
    /// zeroed traits.
    pub fn genome_with_weights(est_weights: Vec<f64>, m_e: usize, m_i: usize) -> Genome {
        let channels = m_e + m_i;
        assert_eq!(est_weights.len(), channels);
        let mut g = genome_with_traits(vec![0.0; channels + 1], m_e, m_i);
        g.est_weights = est_weights;
        g
    }
}
