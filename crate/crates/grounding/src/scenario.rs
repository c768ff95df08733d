//! Scenario files: every knob of a run in one TOML document, validated as
//! a whole before any stepping. Unknown keys are rejected and validation
//! errors name the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{Genome, GoalParams};
use crate::fitness::TrueFitnessConfig;
use crate::symbols::Symbol;
use crate::variation::{EvolveFlags, ModulationParams};
use crate::world::WorldConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Sensor noise standard deviation.
    #[serde(default)]
    pub sensor_noise: f64,
    /// Support threshold for structural aboutness; defaults to
    /// 0.05 * max(true_weights).
    #[serde(default)]
    pub support_threshold: Option<f64>,
    /// When enabled the crowding factor is multiplied into the estimate,
    /// removing the built-in missed reference.
    #[serde(default)]
    pub crowding_sensor: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { sensor_noise: 0.0, support_threshold: None, crowding_sensor: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub c_gen: f64,
    pub c_learn: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub evolve: EvolveFlags,
}

fn default_epsilon() -> f64 {
    1e-6
}

impl ModulationSection {
    pub fn params(&self) -> ModulationParams {
        ModulationParams {
            c_gen: self.c_gen,
            c_learn: self.c_learn,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    /// Founder count.
    pub n0: usize,
    /// Jitter applied to evolvable founder fields.
    #[serde(default)]
    pub sigma_init: f64,
    /// Steps to simulate.
    pub t_steps: u64,
    /// Absolute safety bound; defaults to 10 * capacity.
    #[serde(default)]
    pub hard_cap: Option<usize>,
    /// Trait indices the lifetime walk may touch; defaults to the
    /// tracking traits [0, m_e).
    #[serde(default)]
    pub learnable: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FounderConfig {
    /// Defaults to channel long-run means plus the exposure baseline.
    #[serde(default)]
    pub traits: Option<Vec<f64>>,
    /// Defaults to the true weights on relevant channels, zero elsewhere.
    #[serde(default)]
    pub est_weights: Option<Vec<f64>>,
    /// Defaults to the true-fitness kernel width.
    #[serde(default)]
    pub est_width: Option<f64>,
    #[serde(default)]
    pub symbol_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub symbol_threshold: Option<f64>,
}

/// Raw variant table; `kind` selects which of the remaining fields apply.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    /// FIXED: the constant standard deviation for both channels of change.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// GEST: goal target value.
    #[serde(default)]
    pub target: Option<f64>,
    /// GEST: goal kernel width.
    #[serde(default)]
    pub goal_width: Option<f64>,
    /// GEST: which trait the goal scores.
    #[serde(default)]
    pub trait_index: Option<usize>,
    /// GEST: when true, goal parameters are excluded from mutation.
    #[serde(default)]
    pub isolated: Option<bool>,
}

fn default_kind() -> String {
    "gloop".to_string()
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            sigma: None,
            target: None,
            goal_width: None,
            trait_index: None,
            isolated: None,
        }
    }
}

/// Resolved variant after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    GLoop,
    Fixed { sigma: f64 },
    Gest { goal: GoalParams, isolated: bool },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolsConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_eta")]
    pub eta_align: f64,
    #[serde(default = "default_prune")]
    pub prune_threshold: f64,
    /// Communication games scheduled per population step.
    #[serde(default)]
    pub rounds_per_step: usize,
    /// Exposure change per step while the symbol is active (or relaxing).
    #[serde(default)]
    pub evade_step: f64,
    /// Exposure level agents relax toward when the symbol is quiet.
    #[serde(default = "default_baseline")]
    pub exposure_baseline: f64,
    /// Randomize founder symbols instead of cloning the configured one.
    #[serde(default)]
    pub random_init: bool,
    /// Lag used by the utility diagnostic.
    #[serde(default = "default_lag")]
    pub utility_lag: usize,
}

fn default_eta() -> f64 {
    0.2
}
fn default_prune() -> f64 {
    0.02
}
fn default_baseline() -> f64 {
    0.5
}
fn default_lag() -> usize {
    4
}

impl Default for SymbolsConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            eta_align: default_eta(),
            prune_threshold: default_prune(),
            rounds_per_step: 0,
            evade_step: 0.0,
            exposure_baseline: default_baseline(),
            random_init: false,
            utility_lag: default_lag(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Sliding window (steps) for the estimate/true correlation column.
    #[serde(default = "default_window")]
    pub corr_window: usize,
    /// Steps excluded from experiment summaries; defaults to t_steps / 4.
    #[serde(default)]
    pub burn_in: Option<u64>,
    /// Max agents sampled for per-step alignment columns.
    #[serde(default = "default_alignment_sample")]
    pub alignment_sample: usize,
    /// Contexts sampled per alignment evaluation.
    #[serde(default = "default_alignment_contexts")]
    pub alignment_contexts: usize,
}

fn default_window() -> usize {
    200
}
fn default_alignment_sample() -> usize {
    32
}
fn default_alignment_contexts() -> usize {
    4
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            corr_window: default_window(),
            burn_in: None,
            alignment_sample: default_alignment_sample(),
            alignment_contexts: default_alignment_contexts(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Constant-sigma grid the adaptive variant is compared against.
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
}

fn default_sigma_grid() -> Vec<f64> {
    vec![0.01, 0.03, 0.08, 0.2, 0.5]
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { sigma_grid: default_sigma_grid() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestConfig {
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    /// The true weight of the goal trait at coupling 1.
    #[serde(default = "default_u_ref")]
    pub u_ref: f64,
}

fn default_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_u_ref() -> f64 {
    1.0
}

impl Default for GestConfig {
    fn default() -> Self {
        Self { lambda_grid: default_lambda_grid(), u_ref: default_u_ref() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    #[serde(default = "default_base_seed")]
    pub base: u64,
    #[serde(default = "default_seed_count")]
    pub count: usize,
    /// Explicit seed list; overrides base/count when present.
    #[serde(default)]
    pub list: Option<Vec<u64>>,
}

fn default_base_seed() -> u64 {
    1
}
fn default_seed_count() -> usize {
    50
}

impl Default for SeedsConfig {
    fn default() -> Self {
        Self { base: default_base_seed(), count: default_seed_count(), list: None }
    }
}

impl SeedsConfig {
    /// The effective seed list; `count_override` replaces the configured
    /// count (and ignores any explicit list).
    pub fn effective(&self, count_override: Option<usize>) -> Vec<u64> {
        match (count_override, &self.list) {
            (Some(n), _) => (0..n as u64).map(|i| self.base + i).collect(),
            (None, Some(list)) => list.clone(),
            (None, None) => (0..self.count as u64).map(|i| self.base + i).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
}

/// A full run configuration. Construct by `load_scenario` or in code, then
/// `validate` before running.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: WorldConfig,
    pub fitness: TrueFitnessConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub modulation: ModulationSection,
    pub population: PopulationConfig,
    #[serde(default)]
    pub founder: FounderConfig,
    #[serde(default)]
    pub variant: VariantConfig,
    #[serde(default)]
    pub symbols: SymbolsConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub gest: GestConfig,
    #[serde(default)]
    pub seeds: SeedsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Scenario {
    pub fn dt(&self) -> f64 {
        self.world.dt
    }

    pub fn channel_count(&self) -> usize {
        self.world.m_e + self.world.m_i
    }

    pub fn trait_count(&self) -> usize {
        self.channel_count() + 1
    }

    pub fn hard_cap(&self) -> usize {
        self.population.hard_cap.unwrap_or_else(|| {
            if self.fitness.capacity.is_finite() {
                (10.0 * self.fitness.capacity).ceil() as usize
            } else {
                usize::MAX
            }
        })
    }

    pub fn learnable(&self) -> Vec<usize> {
        self.population.learnable.clone().unwrap_or_else(|| (0..self.world.m_e).collect())
    }

    pub fn support_threshold(&self) -> f64 {
        self.estimator.support_threshold.unwrap_or_else(|| {
            0.05 * self.fitness.true_weights.iter().cloned().fold(0.0, f64::max)
        })
    }

    pub fn burn_in(&self) -> u64 {
        self.metrics.burn_in.unwrap_or(self.population.t_steps / 4)
    }

    /// Resolved variant. Only valid after `validate`.
    pub fn variant(&self) -> Variant {
        match self.variant.kind.as_str() {
            "fixed" => Variant::Fixed { sigma: self.variant.sigma.unwrap_or(0.0) },
            "gest" => Variant::Gest {
                goal: GoalParams {
                    target: self.variant.target.unwrap_or(0.0),
                    width: self.variant.goal_width.unwrap_or(1.0),
                    trait_index: self.variant.trait_index.unwrap_or(0),
                },
                isolated: self.variant.isolated.unwrap_or(true),
            },
            _ => Variant::GLoop,
        }
    }

    /// The founder genome before per-founder jitter.
    pub fn founder_genome(&self) -> Genome {
        let m_e = self.world.m_e;
        let m_i = self.world.m_i;
        let traits = self.founder.traits.clone().unwrap_or_else(|| {
            let mut t: Vec<f64> = (0..m_e)
                .map(|j| {
                    if j == self.world.hazard_index {
                        if let Some(h) = &self.world.hazard {
                            return h.mean_of(0);
                        }
                    }
                    self.world.relevant.mean_of(j)
                })
                .collect();
            t.extend((0..m_i).map(|j| self.world.irrelevant.mean_of(j)));
            t.push(self.symbols.exposure_baseline);
            t
        });
        let est_weights = self.founder.est_weights.clone().unwrap_or_else(|| {
            let mut v = self.fitness.true_weights.clone();
            v.extend(std::iter::repeat(0.0).take(m_i));
            v
        });
        let est_width = self.founder.est_width.unwrap_or(self.fitness.width);
        let symbol = Symbol {
            weights: self
                .founder
                .symbol_weights
                .clone()
                .unwrap_or_else(|| vec![0.0; m_e + m_i]),
            threshold: self.founder.symbol_threshold.unwrap_or(0.5),
        };
        let goal = match self.variant() {
            Variant::Gest { goal, .. } => Some(goal),
            _ => None,
        };
        Genome {
            traits,
            est_weights,
            est_width,
            modulation: self.modulation.params(),
            symbol,
            goal,
        }
    }

    /// Mutation flags with the goal-isolation rule applied: in an isolated
    /// goal variant the goal fields never evolve.
    pub fn evolve_flags(&self) -> EvolveFlags {
        let mut flags = self.modulation.evolve;
        if let Variant::Gest { isolated, .. } = self.variant() {
            if isolated {
                flags.goal = false;
            }
        }
        flags
    }

    /// Whole-scenario validation. Returns non-fatal warnings; errors name
    /// the offending field.
    pub fn validate(&self) -> Result<Vec<String>, ScenarioError> {
        let mut warnings = Vec::new();
        let w = &self.world;
        if w.m_e == 0 {
            return Err(invalid("world.m_e", "at least one relevant channel is required"));
        }
        if !(w.dt > 0.0) {
            return Err(invalid("world.dt", "timestep must be positive"));
        }
        if w.hazard_index >= w.m_e {
            return Err(invalid("world.hazard_index", "must index a relevant channel"));
        }
        if w.context_noise < 0.0 {
            return Err(invalid("world.context_noise", "must be non-negative"));
        }
        let check_group = |name: &str, g: &crate::world::GroupDynamics, n: usize| {
            if g.kappa < 0.0 {
                return Err(invalid(&format!("world.{name}.kappa"), "must be non-negative"));
            }
            if g.sigma < 0.0 {
                return Err(invalid(&format!("world.{name}.sigma"), "must be non-negative"));
            }
            if !(0.0..=1.0).contains(&g.jump_prob) {
                return Err(invalid(
                    &format!("world.{name}.jump_prob"),
                    "must be a probability in [0, 1]",
                ));
            }
            if g.jump_range <= 0.0 {
                return Err(invalid(&format!("world.{name}.jump_range"), "must be positive"));
            }
            if let Some(means) = &g.means {
                if means.len() != n {
                    return Err(invalid(
                        &format!("world.{name}.means"),
                        format!("expected {n} entries, got {}", means.len()),
                    ));
                }
            }
            Ok(())
        };
        check_group("relevant", &w.relevant, w.m_e)?;
        check_group("irrelevant", &w.irrelevant, w.m_i)?;
        if let Some(h) = &w.hazard {
            check_group("hazard", h, 1)?;
        }

        let f = &self.fitness;
        if !(f.r_max > 0.0) {
            return Err(invalid("fitness.r_max", "must be positive"));
        }
        if f.true_weights.len() != w.m_e {
            return Err(invalid(
                "fitness.true_weights",
                format!("expected {} entries, got {}", w.m_e, f.true_weights.len()),
            ));
        }
        if f.true_weights.iter().any(|&u| u < 0.0) {
            return Err(invalid("fitness.true_weights", "weights must be non-negative"));
        }
        if !f.true_weights.iter().any(|&u| u > 0.0) {
            return Err(invalid("fitness.true_weights", "at least one weight must be positive"));
        }
        if !(f.width > 0.0) {
            return Err(invalid("fitness.width", "must be positive"));
        }
        if !(f.capacity >= 1.0) {
            return Err(invalid("fitness.capacity", "must be at least 1 (may be inf)"));
        }
        if f.death_rate < 0.0 {
            return Err(invalid("fitness.death_rate", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&f.hazard_penalty) {
            return Err(invalid("fitness.hazard_penalty", "must lie in [0, 1]"));
        }

        let e = &self.estimator;
        if e.sensor_noise < 0.0 {
            return Err(invalid("estimator.sensor_noise", "must be non-negative"));
        }
        if let Some(t) = e.support_threshold {
            if !(t > 0.0) {
                return Err(invalid("estimator.support_threshold", "must be positive"));
            }
        }

        let m = &self.modulation;
        if m.c_gen < 0.0 || m.c_learn < 0.0 {
            return Err(invalid("modulation.c_gen", "scale constants must be non-negative"));
        }
        if m.sigma_min < 0.0 || m.sigma_min > m.sigma_max {
            return Err(invalid(
                "modulation.sigma_min",
                "bounds must satisfy 0 <= sigma_min <= sigma_max",
            ));
        }
        if !(m.epsilon > 0.0) {
            return Err(invalid("modulation.epsilon", "must be positive"));
        }

        let p = &self.population;
        if p.n0 == 0 {
            return Err(invalid("population.n0", "at least one founder is required"));
        }
        if p.sigma_init < 0.0 {
            return Err(invalid("population.sigma_init", "must be non-negative"));
        }
        if self.hard_cap() < p.n0 {
            return Err(invalid("population.hard_cap", "must be at least n0"));
        }
        for &i in &self.learnable() {
            if i >= self.trait_count() {
                return Err(invalid(
                    "population.learnable",
                    format!("trait index {i} out of range (trait count {})", self.trait_count()),
                ));
            }
        }

        if let Some(t) = &self.founder.traits {
            if t.len() != self.trait_count() {
                return Err(invalid(
                    "founder.traits",
                    format!("expected {} entries, got {}", self.trait_count(), t.len()),
                ));
            }
        }
        if let Some(v) = &self.founder.est_weights {
            if v.len() != self.channel_count() {
                return Err(invalid(
                    "founder.est_weights",
                    format!("expected {} entries, got {}", self.channel_count(), v.len()),
                ));
            }
            if v.iter().any(|&x| x < 0.0) {
                return Err(invalid("founder.est_weights", "weights must be non-negative"));
            }
        }
        if let Some(sw) = &self.founder.symbol_weights {
            if sw.len() != self.channel_count() {
                return Err(invalid(
                    "founder.symbol_weights",
                    format!("expected {} entries, got {}", self.channel_count(), sw.len()),
                ));
            }
        }

        let v = &self.variant;
        match v.kind.as_str() {
            "gloop" => {}
            "fixed" => match v.sigma {
                Some(s) if s >= 0.0 => {}
                Some(_) => return Err(invalid("variant.sigma", "must be non-negative")),
                None => return Err(invalid("variant.sigma", "required for the fixed variant")),
            },
            "gest" => {
                let k = v
                    .trait_index
                    .ok_or_else(|| invalid("variant.trait_index", "required for the gest variant"))?;
                if k >= w.m_e {
                    return Err(invalid(
                        "variant.trait_index",
                        "the goal trait must track a relevant channel",
                    ));
                }
                if v.target.is_none() {
                    return Err(invalid("variant.target", "required for the gest variant"));
                }
                match v.goal_width {
                    Some(gw) if gw > 0.0 => {}
                    Some(_) => return Err(invalid("variant.goal_width", "must be positive")),
                    None => return Err(invalid("variant.goal_width", "required for the gest variant")),
                }
            }
            other => {
                return Err(invalid(
                    "variant.kind",
                    format!("unknown variant `{other}` (expected gloop, fixed, or gest)"),
                ))
            }
        }

        let s = &self.symbols;
        if !(0.0..=1.0).contains(&s.eta_align) {
            return Err(invalid("symbols.eta_align", "must lie in [0, 1]"));
        }
        if s.prune_threshold < 0.0 {
            return Err(invalid("symbols.prune_threshold", "must be non-negative"));
        }
        if s.evade_step < 0.0 {
            return Err(invalid("symbols.evade_step", "must be non-negative"));
        }
        if s.exposure_baseline < 0.0 {
            return Err(invalid("symbols.exposure_baseline", "must be non-negative"));
        }
        if s.utility_lag == 0 {
            return Err(invalid("symbols.utility_lag", "must be at least 1"));
        }

        if self.metrics.corr_window == 0 {
            return Err(invalid("metrics.corr_window", "must be at least 1"));
        }

        if self.compare.sigma_grid.is_empty() {
            return Err(invalid("compare.sigma_grid", "must not be empty"));
        }
        if self.compare.sigma_grid.iter().any(|&s| s < 0.0) {
            return Err(invalid("compare.sigma_grid", "sigmas must be non-negative"));
        }
        if self.gest.lambda_grid.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
            return Err(invalid("gest.lambda_grid", "couplings must lie in [0, 1]"));
        }
        if self.gest.u_ref < 0.0 {
            return Err(invalid("gest.u_ref", "must be non-negative"));
        }

        if self.fitness.r_max * w.dt > 0.5 {
            warnings.push(format!(
                "fitness.r_max * world.dt = {:.3} exceeds 0.5; the Bernoulli birth scheme \
                 underestimates high rates",
                self.fitness.r_max * w.dt
            ));
        }
        Ok(warnings)
    }
}

/// Parse and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

/// Parse and validate scenario TOML text.
pub fn parse_scenario(text: &str) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let scenario: Scenario =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let warnings = scenario.validate()?;
    Ok((scenario, warnings))
}
