//! The reproductive loop: a discrete-time birth-death engine that
//! realizes true fitness stochastically as offspring counts. Everything
//! is scheduled in agent-id order from counter-keyed streams, so a run is
//! a pure function of (scenario, seed).

use rand::Rng;
use thiserror::Error;

use crate::estimator::{estimate_fitness, sense, structural_aboutness, Genome, SensedVector};
use crate::fitness::{death_event, resource_factor, true_fitness};
use crate::metrics::{MetricsRow, MetricsSeries};
use crate::rng::{substream, Domain};
use crate::scenario::{Scenario, Variant};
use crate::stats::{PairSums, WindowedCorrelation};
use crate::symbols::{
    alignment_metrics, communication_round, evade_on_symbol, symbol_activation, Symbol,
};
use crate::variation::{learn_traits, modulation_sigma, mutate_genome_with_sigma, VariationKind};
use crate::world::{sample_context, step_environment, EnvironmentState};

/// Deterministic substream addressing, re-exported at the engine level.
pub use crate::rng::substream as rng_substream;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("population exceeded the hard cap of {cap} at step {step} (capped growth)")]
    PopulationCapped {
        cap: usize,
        step: u64,
        /// Metrics recorded up to and including the capped step.
        series: Box<MetricsSeries>,
    },
}

/// One live agent.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u64,
    pub genome: Genome,
    pub age: u64,
    pub last_f_est: f64,
    pub last_sensed: SensedVector,
    /// Structural aboutness of this agent's estimator, cached at creation
    /// (estimator weights are fixed within a lifetime).
    pub recall: f64,
    pub precision: f64,
}

impl Agent {
    fn new(id: u64, genome: Genome, scenario: &Scenario) -> Self {
        let report = structural_aboutness(
            &genome,
            &scenario.fitness.true_weights,
            scenario.support_threshold(),
        );
        let channels = genome.channel_count();
        Agent {
            id,
            genome,
            age: 0,
            last_f_est: 0.0,
            last_sensed: SensedVector { values: vec![0.0; channels] },
            recall: report.recall,
            precision: report.precision,
        }
    }
}

/// The agent collection, ordered by id (the canonical processing order).
#[derive(Debug, Clone)]
pub struct Population {
    pub agents: Vec<Agent>,
    pub next_id: u64,
    pub step: u64,
}

impl Population {
    /// Found a population of jittered clones of the scenario's founder
    /// genome.
    pub fn founders(scenario: &Scenario, seed: u64) -> Self {
        let base = scenario.founder_genome();
        let flags = scenario.evolve_flags();
        let mut agents = Vec::with_capacity(scenario.population.n0);
        for i in 0..scenario.population.n0 {
            let mut rng = substream(seed, Domain::Init, i as u64, 0);
            let mut genome = if scenario.population.sigma_init > 0.0 {
                mutate_genome_with_sigma(&base, scenario.population.sigma_init, &flags, &mut rng)
            } else {
                base.clone()
            };
            if scenario.symbols.random_init {
                use rand_distr::StandardNormal;
                for w in &mut genome.symbol.weights {
                    *w = rng.sample::<f64, _>(StandardNormal);
                }
                genome.symbol.threshold = rng.sample::<f64, _>(StandardNormal);
            }
            agents.push(Agent::new(i as u64, genome, scenario));
        }
        Population { agents, next_id: scenario.population.n0 as u64, step: 0 }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Per-step aggregates handed to the metrics layer. Estimate- and
/// fitness-side means are over the cohort present at the start of the
/// step (the agents that sensed, learned, and were scored).
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub births: u64,
    pub deaths: u64,
    pub mean_f_true: f64,
    pub max_f_true: f64,
    pub mean_f_est: f64,
    pub mean_sigma_gen: f64,
    pub mean_sigma_learn: f64,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub activation_fraction: f64,
    /// (f_est, f_true) sums for the coupling window.
    pub est_pairs: PairSums,
    /// (goal signal, f_true) sums; empty unless the variant has a goal.
    pub goal_pairs: PairSums,
}

/// Hard-cap breach, carrying the step's aggregates so the abort can still
/// be recorded.
#[derive(Debug, Error)]
#[error("population exceeded the hard cap of {cap} at step {step}")]
pub struct CapExceeded {
    pub cap: usize,
    pub step: u64,
    pub stats: Box<StepStats>,
}

fn resolve_sigmas(agent: &Agent, variant: &Variant, r_max: f64) -> (f64, f64) {
    match variant {
        Variant::GLoop => (
            modulation_sigma(agent.last_f_est, &agent.genome.modulation, VariationKind::Hereditary),
            modulation_sigma(agent.last_f_est, &agent.genome.modulation, VariationKind::Lifetime),
        ),
        Variant::Fixed { sigma } => (*sigma, *sigma),
        Variant::Gest { .. } => {
            let signal = agent.genome.goal_signal(r_max).unwrap_or(agent.last_f_est);
            (
                modulation_sigma(signal, &agent.genome.modulation, VariationKind::Hereditary),
                modulation_sigma(signal, &agent.genome.modulation, VariationKind::Lifetime),
            )
        }
    }
}

/// Advance the population one step against an already-stepped
/// environment. Phases run in fixed order, each iterating agents in id
/// order:
///
/// 1. sense and estimate for every agent (plus symbol-driven evasion),
/// 2. lifetime trait walks,
/// 3. true fitness at the step-start count,
/// 4. births: one Bernoulli child per agent with probability
///    min(1, f_true * dt), genomes mutated at the parent's hereditary
///    sigma, ids assigned in parent order; newborns sit out the rest of
///    the step,
/// 5. deaths among the step-start agents,
/// 6. ages increment, newborns join,
/// 7. communication rounds when symbols are enabled.
pub fn step_population(
    pop: &mut Population,
    env: &EnvironmentState,
    scenario: &Scenario,
    seed: u64,
) -> Result<StepStats, CapExceeded> {
    let step = env.step;
    pop.step = step;
    let dt = scenario.dt();
    let variant = scenario.variant();
    let flags = scenario.evolve_flags();
    let learnable = scenario.learnable();
    let n_start = pop.len();

    if n_start == 0 {
        return Ok(StepStats::default());
    }

    let (mut stats, sigmas_gen) = sense_and_learn(pop, env, scenario, seed, &variant, &learnable);

    // Phase 3: true fitness at the step-start count, then the estimate-side
    // aggregates while agents still align with their scores.
    let f_true_vals: Vec<f64> = pop
        .agents
        .iter()
        .map(|a| true_fitness(&a.genome, env, n_start, &scenario.fitness, &scenario.world))
        .collect();
    aggregate(&mut stats, pop, &f_true_vals, &variant, scenario.fitness.r_max);

    // Phase 4: births.
    let mut newborns = Vec::new();
    {
        let mut birth_rng = substream(seed, Domain::Birth, 0, step);
        let mut mutate_rng = substream(seed, Domain::Mutate, 0, step);
        for (i, f) in f_true_vals.iter().enumerate() {
            let p = (f * dt).min(1.0);
            if p > 0.0 && birth_rng.random::<f64>() < p {
                let genome = mutate_genome_with_sigma(
                    &pop.agents[i].genome,
                    sigmas_gen[i],
                    &flags,
                    &mut mutate_rng,
                );
                let id = pop.next_id;
                pop.next_id += 1;
                newborns.push(Agent::new(id, genome, scenario));
            }
        }
    }
    stats.births = newborns.len() as u64;

    // Phase 5: deaths among the step-start agents only, keeping the growth
    // law exactly N * (1 + (f - d) dt) in expectation.
    {
        let mut rng = substream(seed, Domain::Death, 0, step);
        let mut survivors = Vec::with_capacity(pop.agents.len());
        for agent in pop.agents.drain(..) {
            if death_event(&scenario.fitness, dt, &mut rng) {
                stats.deaths += 1;
            } else {
                survivors.push(agent);
            }
        }
        pop.agents = survivors;
    }

    // Phase 6: ages, then newborns join (their ids ascend past all
    // existing ones, so id order is preserved).
    for agent in &mut pop.agents {
        agent.age += 1;
    }
    pop.agents.extend(newborns);

    let cap = scenario.hard_cap();
    if pop.len() > cap {
        return Err(CapExceeded { cap, step, stats: Box::new(stats) });
    }

    // Phase 7: communication games.
    if scenario.symbols.enabled && scenario.symbols.rounds_per_step > 0 && pop.len() >= 2 {
        let mut sched = substream(seed, Domain::SymbolSchedule, 0, step);
        let mut ctx_rng = substream(seed, Domain::Context, 0, step);
        for _ in 0..scenario.symbols.rounds_per_step {
            let n = pop.len();
            let speaker = sched.random_range(0..n);
            let mut hearer = sched.random_range(0..n - 1);
            if hearer >= speaker {
                hearer += 1;
            }
            let ctx = sample_context(env, &scenario.world, &mut ctx_rng);
            let speaker_symbol = pop.agents[speaker].genome.symbol.clone();
            communication_round(
                &speaker_symbol,
                &mut pop.agents[hearer].genome.symbol,
                &ctx,
                scenario.symbols.eta_align,
                scenario.symbols.prune_threshold,
            );
        }
    }

    Ok(stats)
}

/// Phase 1 and 2: sensing, estimation, symbol-driven evasion, sigma
/// resolution, and the lifetime walk. Returns the per-agent hereditary
/// sigmas for the birth phase.
fn sense_and_learn(
    pop: &mut Population,
    env: &EnvironmentState,
    scenario: &Scenario,
    seed: u64,
    variant: &Variant,
    learnable: &[usize],
) -> (StepStats, Vec<f64>) {
    let step = env.step;
    let n_start = pop.len();
    let r_max = scenario.fitness.r_max;
    let mut stats = StepStats::default();
    let mut sigmas_gen = Vec::with_capacity(n_start);
    let mut sigma_learn_sum = 0.0;
    let mut active_count = 0usize;

    {
        let mut rng = substream(seed, Domain::Sense, 0, step);
        let crowding = if scenario.estimator.crowding_sensor {
            resource_factor(n_start, scenario.fitness.capacity)
        } else {
            1.0
        };
        let mut learn_rng = substream(seed, Domain::Learn, 0, step);
        for agent in &mut pop.agents {
            let sensed = sense(env, scenario.estimator.sensor_noise, &mut rng);
            let f_est = estimate_fitness(&agent.genome, &sensed, r_max) * crowding;
            agent.last_sensed = sensed;
            agent.last_f_est = f_est;
            if scenario.symbols.enabled {
                let act =
                    symbol_activation(&agent.genome.symbol, agent.last_sensed.as_slice()).active;
                if act {
                    active_count += 1;
                }
                if scenario.symbols.evade_step > 0.0 {
                    let exposure = evade_on_symbol(
                        agent.genome.exposure(),
                        act,
                        scenario.symbols.evade_step,
                        scenario.symbols.exposure_baseline,
                    );
                    agent.genome.set_exposure(exposure);
                }
            }
            let (sg, sl) = resolve_sigmas(agent, variant, r_max);
            sigmas_gen.push(sg);
            sigma_learn_sum += sl;
            learn_traits(&mut agent.genome, sl, learnable, scenario.dt(), &mut learn_rng);
        }
    }

    let n = n_start as f64;
    stats.mean_sigma_gen = sigmas_gen.iter().sum::<f64>() / n;
    stats.mean_sigma_learn = sigma_learn_sum / n;
    stats.activation_fraction = active_count as f64 / n;
    (stats, sigmas_gen)
}

/// Fill in the fitness- and estimate-side aggregates while
/// `pop.agents[i]` still corresponds to `f_true_vals[i]`.
fn aggregate(
    stats: &mut StepStats,
    pop: &Population,
    f_true_vals: &[f64],
    variant: &Variant,
    r_max: f64,
) {
    let n = f_true_vals.len() as f64;
    let mut f_true_sum = 0.0;
    let mut f_est_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut precision_sum = 0.0;
    let goal_variant = matches!(variant, Variant::Gest { .. });
    for (agent, &f_true) in pop.agents.iter().zip(f_true_vals) {
        f_true_sum += f_true;
        f_est_sum += agent.last_f_est;
        recall_sum += agent.recall;
        precision_sum += agent.precision;
        stats.est_pairs.add(agent.last_f_est, f_true);
        if goal_variant {
            if let Some(g) = agent.genome.goal_signal(r_max) {
                stats.goal_pairs.add(g, f_true);
            }
        }
    }
    stats.mean_f_true = f_true_sum / n;
    stats.max_f_true = f_true_vals.iter().cloned().fold(0.0, f64::max);
    stats.mean_f_est = f_est_sum / n;
    stats.mean_recall = recall_sum / n;
    stats.mean_precision = precision_sum / n;
}

/// Measurement-only pass used for the initial metrics row: sense,
/// estimate, and score the founders at step 0 without learning, births,
/// deaths, or evasion.
fn measure_initial(
    pop: &mut Population,
    env: &EnvironmentState,
    scenario: &Scenario,
    seed: u64,
) -> StepStats {
    let n_start = pop.len();
    let r_max = scenario.fitness.r_max;
    let variant = scenario.variant();
    let mut stats = StepStats::default();
    if n_start == 0 {
        return stats;
    }
    let mut rng = substream(seed, Domain::Sense, 0, 0);
    let crowding = if scenario.estimator.crowding_sensor {
        resource_factor(n_start, scenario.fitness.capacity)
    } else {
        1.0
    };
    let mut sigma_gen_sum = 0.0;
    let mut sigma_learn_sum = 0.0;
    let mut active_count = 0usize;
    for agent in &mut pop.agents {
        let sensed = sense(env, scenario.estimator.sensor_noise, &mut rng);
        let f_est = estimate_fitness(&agent.genome, &sensed, r_max) * crowding;
        agent.last_sensed = sensed;
        agent.last_f_est = f_est;
        if scenario.symbols.enabled
            && symbol_activation(&agent.genome.symbol, agent.last_sensed.as_slice()).active
        {
            active_count += 1;
        }
        let (sg, sl) = resolve_sigmas(agent, &variant, r_max);
        sigma_gen_sum += sg;
        sigma_learn_sum += sl;
    }
    let f_true_vals: Vec<f64> = pop
        .agents
        .iter()
        .map(|a| true_fitness(&a.genome, env, n_start, &scenario.fitness, &scenario.world))
        .collect();
    aggregate(&mut stats, pop, &f_true_vals, &variant, r_max);
    let n = n_start as f64;
    stats.mean_sigma_gen = sigma_gen_sum / n;
    stats.mean_sigma_learn = sigma_learn_sum / n;
    stats.activation_fraction = active_count as f64 / n;
    stats
}

/// Alignment columns for one row: symbol agreement and weight cosine over
/// a deterministic sample of agents and freshly drawn contexts.
fn alignment_columns(
    pop: &Population,
    env: &EnvironmentState,
    scenario: &Scenario,
    seed: u64,
    step: u64,
) -> (f64, f64) {
    if !scenario.symbols.enabled {
        return (0.0, 0.0);
    }
    if pop.len() < 2 {
        return (1.0, 0.0);
    }
    let sample = scenario.metrics.alignment_sample.max(2).min(pop.len());
    let symbols: Vec<&Symbol> = pop.agents[..sample].iter().map(|a| &a.genome.symbol).collect();
    let mut rng = substream(seed, Domain::Metrics, 0, step);
    let contexts: Vec<_> = (0..scenario.metrics.alignment_contexts.max(1))
        .map(|_| sample_context(env, &scenario.world, &mut rng))
        .collect();
    alignment_metrics(&symbols, &contexts).unwrap_or((1.0, 0.0))
}

/// Full output of a run: the metrics series plus the per-step windowed
/// correlation of the goal signal with true fitness (goal variants only).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: MetricsSeries,
    pub goal_corr: Vec<(u64, f64)>,
}

/// Run a full simulation and return its metrics series. Initializes the
/// environment and founders from the scenario, iterates environment and
/// population steps for `t_steps`, and records per-step metrics. Ends
/// early on extinction (recording the step); a hard-cap breach aborts
/// with the partial series attached.
pub fn run_simulation(scenario: &Scenario, seed: u64) -> Result<MetricsSeries, SimError> {
    Ok(run_full(scenario, seed)?.series)
}

pub fn run_full(scenario: &Scenario, seed: u64) -> Result<RunOutput, SimError> {
    let mut env = scenario.world.initial_state();
    let mut pop = Population::founders(scenario, seed);
    let mut window = WindowedCorrelation::new(scenario.metrics.corr_window);
    let mut goal_window = WindowedCorrelation::new(scenario.metrics.corr_window);
    let track_goal = matches!(scenario.variant(), Variant::Gest { .. });
    let mut series = MetricsSeries::default();
    let mut goal_corr = Vec::new();

    let stats0 = measure_initial(&mut pop, &env, scenario, seed);
    window.push(stats0.est_pairs);
    if track_goal {
        goal_window.push(stats0.goal_pairs);
        goal_corr.push((0, goal_window.correlation().value));
    }
    let (agreement, cosine) = alignment_columns(&pop, &env, scenario, seed, 0);
    series.rows.push(make_row(
        0,
        pop.len() as u64,
        &stats0,
        window.correlation().value,
        agreement,
        cosine,
    ));

    for step in 1..=scenario.population.t_steps {
        let mut world_rng = substream(seed, Domain::World, 0, step);
        env = step_environment(&env, &scenario.world, &mut world_rng);

        let (stats, capped) = match step_population(&mut pop, &env, scenario, seed) {
            Ok(stats) => (stats, false),
            Err(cap) => (*cap.stats, true),
        };
        window.push(stats.est_pairs);
        let value_corr = window.correlation().value;
        if track_goal {
            goal_window.push(stats.goal_pairs);
            goal_corr.push((step, goal_window.correlation().value));
        }
        let (agreement, cosine) = alignment_columns(&pop, &env, scenario, seed, step);
        series.rows.push(make_row(step, pop.len() as u64, &stats, value_corr, agreement, cosine));

        if capped {
            series.capped_at = Some(step);
            return Err(SimError::PopulationCapped {
                cap: scenario.hard_cap(),
                step,
                series: Box::new(series),
            });
        }
        if pop.is_empty() {
            series.extinct_at = Some(step);
            break;
        }
    }
    Ok(RunOutput { series, goal_corr })
}

fn make_row(
    step: u64,
    n: u64,
    stats: &StepStats,
    value_corr: f64,
    symbol_agreement: f64,
    mean_cosine: f64,
) -> MetricsRow {
    MetricsRow {
        step,
        n,
        births: stats.births,
        deaths: stats.deaths,
        mean_f_true: stats.mean_f_true,
        max_f_true: stats.max_f_true,
        mean_f_est: stats.mean_f_est,
        value_corr,
        mean_sigma_gen: stats.mean_sigma_gen,
        mean_sigma_learn: stats.mean_sigma_learn,
        mean_recall: stats.mean_recall,
        mean_precision: stats.mean_precision,
        symbol_agreement,
        mean_cosine,
        activation_fraction: stats.activation_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn scenario(extra: &str) -> Scenario {
        let base = r#"
            [world]
            m_e = 2
            m_i = 1
            dt = 0.5

            [fitness]
            r_max = 0.4
            true_weights = [1.0, 1.0]
            width = 0.5
            capacity = 200.0
            death_rate = 0.05

            [modulation]
            c_gen = 0.02
            c_learn = 0.02
            sigma_min = 0.005
            sigma_max = 0.5

            [population]
            n0 = 20
            sigma_init = 0.02
            t_steps = 50
        "#;
        let (s, _) = parse_scenario(&format!("{base}\n{extra}")).unwrap();
        s
    }

    #[test]
    fn stasis_when_no_births_or_deaths() {
        // Zero death rate and zero fitness: traits far off a narrow peak.
        let mut s = scenario("");
        s.fitness.death_rate = 0.0;
        s.founder.traits = Some(vec![100.0, 100.0, 0.0, 0.0]);
        s.population.sigma_init = 0.0;
        let env = s.world.initial_state();
        let mut pop = Population::founders(&s, 1);
        let ids: Vec<u64> = pop.agents.iter().map(|a| a.id).collect();
        let mut env1 = env;
        env1.step = 1;
        let stats = step_population(&mut pop, &env1, &s, 1).unwrap();
        assert_eq!(stats.births, 0);
        assert_eq!(stats.deaths, 0);
        assert_eq!(pop.agents.iter().map(|a| a.id).collect::<Vec<_>>(), ids);
        assert!(pop.agents.iter().all(|a| a.age == 1));
    }

    #[test]
    fn saturation_means_zero_births() {
        let mut s = scenario("");
        s.fitness.capacity = 20.0;
        s.fitness.death_rate = 0.0;
        let env = s.world.initial_state();
        let mut pop = Population::founders(&s, 2);
        assert_eq!(pop.len(), 20);
        let mut env1 = env;
        env1.step = 1;
        let stats = step_population(&mut pop, &env1, &s, 2).unwrap();
        assert_eq!(stats.births, 0);
        assert_eq!(stats.mean_f_true, 0.0);
    }

    #[test]
    fn ids_stay_sorted_and_unique_across_steps() {
        let s = scenario("");
        let mut env = s.world.initial_state();
        let mut pop = Population::founders(&s, 3);
        for step in 1..=50 {
            let mut rng = substream(3, Domain::World, 0, step);
            env = step_environment(&env, &s.world, &mut rng);
            step_population(&mut pop, &env, &s, 3).unwrap();
            let ids: Vec<u64> = pop.agents.iter().map(|a| a.id).collect();
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(ids, sorted);
        }
    }

    #[test]
    fn run_is_reproducible() {
        let s = scenario("");
        let a = run_simulation(&s, 11).unwrap();
        let b = run_simulation(&s, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_steps_yields_only_initial_row() {
        let mut s = scenario("");
        s.population.t_steps = 0;
        let series = run_simulation(&s, 5).unwrap();
        assert_eq!(series.rows.len(), 1);
        assert_eq!(series.rows[0].step, 0);
        assert_eq!(series.rows[0].n, 20);
    }

    #[test]
    fn extinction_is_absorbing_and_recorded() {
        let mut s = scenario("");
        s.fitness.death_rate = 10.0; // certain death each step
        // Founders sit far off the fitness peak, so nobody reproduces.
        s.founder.traits = Some(vec![100.0, 100.0, 0.0, 0.0]);
        s.population.sigma_init = 0.0;
        s.population.t_steps = 10;
        let series = run_simulation(&s, 7).unwrap();
        assert_eq!(series.extinct_at, Some(1));
        let last = series.rows.last().unwrap();
        assert_eq!(last.n, 0);
        assert_eq!(last.step, 1);
    }

    #[test]
    fn hard_cap_aborts_with_partial_series() {
        let mut s = scenario("");
        s.fitness.capacity = f64::INFINITY;
        s.fitness.r_max = 1.9;
        s.fitness.death_rate = 0.0;
        s.population.hard_cap = Some(40);
        s.population.t_steps = 400;
        match run_simulation(&s, 9) {
            Err(SimError::PopulationCapped { cap, step, series }) => {
                assert_eq!(cap, 40);
                assert_eq!(series.capped_at, Some(step));
                assert!(series.rows.len() as u64 == step + 1);
            }
            other => panic!("expected capped abort, got {other:?}"),
        }
    }

    // Analytic branching-process oracle: with resources unconstrained,
    // no deaths, and constant fitness f0, E[N(t)] = N0 (1 + f0 dt)^(t/dt).
    #[test]
    fn branching_growth_matches_expectation() {
        let mut s = scenario("");
        s.fitness.capacity = f64::INFINITY;
        s.fitness.death_rate = 0.0;
        s.fitness.r_max = 0.25;
        // Flat landscape: founders sit exactly on the peak and nothing
        // perturbs traits.
        s.population.sigma_init = 0.0;
        s.modulation.sigma_min = 0.0;
        s.modulation.sigma_max = 0.0;
        s.population.n0 = 50;
        s.population.hard_cap = Some(1_000_000);
        let t_units = 20.0;
        s.population.t_steps = (t_units / s.world.dt) as u64;
        let seeds = 200u64;
        let mut total = 0.0;
        for seed in 0..seeds {
            let series = run_simulation(&s, seed).unwrap();
            total += series.rows.last().unwrap().n as f64;
        }
        let measured = total / seeds as f64;
        let expected = 50.0 * (1.0 + 0.25 * 0.5f64).powf(t_units / 0.5);
        assert!(
            (measured - expected).abs() / expected < 0.10,
            "mean N(t=20) {measured} vs branching value {expected}"
        );
    }

    // Subcritical oracle: death rate above the birth rate drives every
    // seed extinct.
    #[test]
    fn subcritical_always_goes_extinct() {
        let mut s = scenario("");
        s.fitness.r_max = 0.2;
        s.fitness.death_rate = 0.4;
        s.population.n0 = 10;
        s.population.t_steps = 5000;
        for seed in 0..50 {
            let series = run_simulation(&s, seed).unwrap();
            assert!(series.extinct_at.is_some(), "seed {seed} survived");
        }
    }

    #[test]
    fn founders_respect_scenario_jitter() {
        let mut s = scenario("");
        s.population.sigma_init = 0.0;
        let pop = Population::founders(&s, 1);
        let g0 = &pop.agents[0].genome;
        assert!(pop.agents.iter().all(|a| a.genome == *g0));

        s.population.sigma_init = 0.1;
        let pop = Population::founders(&s, 1);
        let g0 = pop.agents[0].genome.clone();
        assert!(pop.agents.iter().skip(1).any(|a| a.genome != g0));
    }
}
