//! Experiment orchestration: paired-seed comparison of the adaptive
//! variance loop against constant baselines, goal substitution sweeps,
//! and pure naming-game runs. Seeds and grid cells are independent jobs
//! run in parallel; reports are assembled in a fixed order, so any report
//! is a pure function of (scenario, seed list).

use rayon::prelude::*;
use serde::Serialize;

use crate::population::{run_full, Population, SimError};
use crate::rng::{substream, Domain};
use crate::scenario::Scenario;
use crate::stats::{mean, rank_sum_u};
use crate::symbols::{alignment_metrics, communication_round, Symbol};
use crate::world::{sample_context, step_environment};
use rand::Rng;

/// One run's contribution to a report: the time-averaged mean true
/// fitness over the second half of the run (absent steps after extinction
/// count as zero) and whether the population survived.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub seed: u64,
    pub score: f64,
    pub survived: bool,
    pub error: Option<String>,
}

fn summarize(
    scenario: &Scenario,
    label: &str,
    seed: u64,
) -> (RunSummary, Vec<(u64, f64)>) {
    let t = scenario.population.t_steps;
    let from = t / 2;
    match run_full(scenario, seed) {
        Ok(out) => (
            RunSummary {
                variant: label.to_string(),
                seed,
                score: out.series.mean_f_true_from(from, t),
                survived: out.series.survived(),
                error: None,
            },
            out.goal_corr,
        ),
        Err(SimError::PopulationCapped { cap, step, series }) => (
            RunSummary {
                variant: label.to_string(),
                seed,
                score: series.mean_f_true_from(from, t),
                survived: false,
                error: Some(format!("capped at {cap} on step {step}")),
            },
            Vec::new(),
        ),
    }
}

fn with_variant(base: &Scenario, kind: &str) -> Scenario {
    let mut s = base.clone();
    s.variant.kind = kind.to_string();
    s
}

fn fixed_scenario(base: &Scenario, sigma: f64) -> Scenario {
    let mut s = with_variant(base, "fixed");
    s.variant.sigma = Some(sigma);
    s
}

/// Paired comparison of one adaptive variant against a grid of constant
/// baselines on common seeds.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// Adaptive-variant summaries, one per seed.
    pub adaptive: Vec<RunSummary>,
    /// Baseline summaries per grid sigma, same seed order.
    pub baselines: Vec<(f64, Vec<RunSummary>)>,
    /// The grid sigma with the highest mean score.
    pub best_sigma: f64,
    /// Fraction of paired seeds the adaptive variant wins against the
    /// best baseline (ties count one half).
    pub win_rate: f64,
    pub n_pairs: usize,
    pub adaptive_survival: f64,
    pub best_baseline_survival: f64,
    /// Mann-Whitney statistic of adaptive scores against the best
    /// baseline's, normalized to [0, 1].
    pub rank_sum: f64,
}

impl ComparisonReport {
    fn build(adaptive: Vec<RunSummary>, baselines: Vec<(f64, Vec<RunSummary>)>) -> Self {
        let (best_sigma, best_runs) = baselines
            .iter()
            .max_by(|a, b| {
                let ma = mean(&a.1.iter().map(|r| r.score).collect::<Vec<_>>());
                let mb = mean(&b.1.iter().map(|r| r.score).collect::<Vec<_>>());
                ma.partial_cmp(&mb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(s, runs)| (*s, runs.clone()))
            .expect("non-empty sigma grid");

        let mut wins = 0.0;
        for (a, b) in adaptive.iter().zip(&best_runs) {
            debug_assert_eq!(a.seed, b.seed);
            if a.score > b.score {
                wins += 1.0;
            } else if a.score == b.score {
                wins += 0.5;
            }
        }
        let n_pairs = adaptive.len();
        let win_rate = if n_pairs == 0 { 0.5 } else { wins / n_pairs as f64 };
        let survival = |runs: &[RunSummary]| {
            if runs.is_empty() {
                0.0
            } else {
                runs.iter().filter(|r| r.survived).count() as f64 / runs.len() as f64
            }
        };
        let a_scores: Vec<f64> = adaptive.iter().map(|r| r.score).collect();
        let b_scores: Vec<f64> = best_runs.iter().map(|r| r.score).collect();
        ComparisonReport {
            win_rate,
            n_pairs,
            adaptive_survival: survival(&adaptive),
            best_baseline_survival: survival(&best_runs),
            rank_sum: rank_sum_u(&a_scores, &b_scores),
            best_sigma,
            adaptive,
            baselines,
        }
    }

    /// Flat per-cell rows for file emission, in deterministic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,sigma,seed,score,survived,error\n");
        for r in &self.adaptive {
            out.push_str(&format!(
                "{},,{},{},{},{}\n",
                r.variant,
                r.seed,
                r.score,
                r.survived,
                r.error.clone().unwrap_or_default()
            ));
        }
        for (sigma, runs) in &self.baselines {
            for r in runs {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.variant,
                    sigma,
                    r.seed,
                    r.score,
                    r.survived,
                    r.error.clone().unwrap_or_default()
                ));
            }
        }
        out
    }
}

/// Run the adaptive loop once per seed and every constant baseline per
/// grid point per seed, then compare against the best baseline.
pub fn compare_experiment(base: &Scenario, sigma_grid: &[f64], seeds: &[u64]) -> ComparisonReport {
    let gloop = with_variant(base, "gloop");
    let adaptive: Vec<RunSummary> = seeds
        .par_iter()
        .map(|&seed| summarize(&gloop, "gloop", seed).0)
        .collect();
    let baselines: Vec<(f64, Vec<RunSummary>)> = sigma_grid
        .iter()
        .map(|&sigma| {
            let s = fixed_scenario(base, sigma);
            let runs: Vec<RunSummary> = seeds
                .par_iter()
                .map(|&seed| summarize(&s, "fixed", seed).0)
                .collect();
            (sigma, runs)
        })
        .collect();
    ComparisonReport::build(adaptive, baselines)
}

/// One coupling point of a goal-substitution sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GestCell {
    pub lambda: f64,
    pub report: ComparisonReport,
    /// Windowed correlation of the goal signal with true fitness,
    /// averaged over seeds, sampled along the run. Diagnoses goal drift
    /// when the goal is not isolated.
    pub goal_drift: Vec<(u64, f64)>,
}

/// Build the gest scenario for one coupling: the goal trait's true weight
/// becomes lambda * u_ref, so the goal matters to fitness exactly to
/// degree lambda.
pub fn gest_scenario(base: &Scenario, lambda: f64, isolated: bool) -> Scenario {
    let mut s = with_variant(base, "gest");
    if s.variant.trait_index.is_none() {
        s.variant.trait_index = Some(0);
    }
    if s.variant.target.is_none() {
        s.variant.target = Some(0.0);
    }
    if s.variant.goal_width.is_none() {
        s.variant.goal_width = Some(s.fitness.width);
    }
    s.variant.isolated = Some(isolated);
    let k = s.variant.trait_index.unwrap();
    s.fitness.true_weights[k] = lambda * s.gest.u_ref;
    if !isolated {
        s.modulation.evolve.goal = true;
    }
    s
}

/// Sweep goal coupling: for each lambda, the goal-driven variant against
/// the best constant baseline on the same (lambda-adjusted) world.
pub fn gest_experiment(
    base: &Scenario,
    lambda_grid: &[f64],
    seeds: &[u64],
    isolated: bool,
) -> Vec<GestCell> {
    lambda_grid
        .iter()
        .map(|&lambda| {
            let gest = gest_scenario(base, lambda, isolated);
            let results: Vec<(RunSummary, Vec<(u64, f64)>)> = seeds
                .par_iter()
                .map(|&seed| summarize(&gest, "gest", seed))
                .collect();
            let adaptive: Vec<RunSummary> = results.iter().map(|(r, _)| r.clone()).collect();
            let goal_drift = average_drift(&results);
            let baselines: Vec<(f64, Vec<RunSummary>)> = base
                .compare
                .sigma_grid
                .iter()
                .map(|&sigma| {
                    let s = fixed_scenario(&gest, sigma);
                    let runs: Vec<RunSummary> = seeds
                        .par_iter()
                        .map(|&seed| summarize(&s, "fixed", seed).0)
                        .collect();
                    (sigma, runs)
                })
                .collect();
            GestCell { lambda, report: ComparisonReport::build(adaptive, baselines), goal_drift }
        })
        .collect()
}

fn average_drift(results: &[(RunSummary, Vec<(u64, f64)>)]) -> Vec<(u64, f64)> {
    let longest = results.iter().map(|(_, d)| d.len()).max().unwrap_or(0);
    if longest == 0 {
        return Vec::new();
    }
    // Sample every 50th step to keep reports small.
    let mut out = Vec::new();
    let mut idx = 0;
    while idx < longest {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut step = 0;
        for (_, drift) in results {
            if let Some(&(s, v)) = drift.get(idx) {
                sum += v;
                count += 1;
                step = s;
            }
        }
        if count > 0 {
            out.push((step, sum / count as f64));
        }
        idx += 50;
    }
    out
}

/// Alignment trajectory of a pure naming game: a fixed population (no
/// births or deaths) playing pairwise games round after round.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolTrajectory {
    pub seed: u64,
    /// (round, pairwise agreement, mean weight cosine), sampled every
    /// `eval_every` rounds.
    pub points: Vec<(u64, f64, f64)>,
}

/// Rounds between alignment evaluations in `symbol_experiment`.
pub fn symbol_eval_interval(rounds: u64) -> u64 {
    (rounds / 100).max(1)
}

/// Run the naming game for `rounds` rounds per seed. The environment
/// keeps evolving underneath so contexts cover the channel space; symbols
/// start randomized when the scenario says so.
pub fn symbol_experiment(base: &Scenario, rounds: u64, seeds: &[u64]) -> Vec<SymbolTrajectory> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut env = base.world.initial_state();
            let pop = Population::founders(base, seed);
            let mut symbols: Vec<Symbol> =
                pop.agents.iter().map(|a| a.genome.symbol.clone()).collect();
            let eval_every = symbol_eval_interval(rounds);
            let mut points = Vec::new();
            let eval = |round: u64, env: &crate::world::EnvironmentState, symbols: &[Symbol]| {
                let mut rng = substream(seed, Domain::Metrics, 0, round);
                let contexts: Vec<_> = (0..base.metrics.alignment_contexts.max(1))
                    .map(|_| sample_context(env, &base.world, &mut rng))
                    .collect();
                let refs: Vec<&Symbol> = symbols.iter().collect();
                let (agreement, cosine) = alignment_metrics(&refs, &contexts).unwrap_or((1.0, 0.0));
                (round, agreement, cosine)
            };
            points.push(eval(0, &env, &symbols));
            for round in 1..=rounds {
                let mut world_rng = substream(seed, Domain::World, 0, round);
                env = step_environment(&env, &base.world, &mut world_rng);
                let mut sched = substream(seed, Domain::SymbolSchedule, 0, round);
                let n = symbols.len();
                let speaker = sched.random_range(0..n);
                let mut hearer = sched.random_range(0..n - 1);
                if hearer >= speaker {
                    hearer += 1;
                }
                let mut ctx_rng = substream(seed, Domain::Context, 0, round);
                let ctx = sample_context(&env, &base.world, &mut ctx_rng);
                let speaker_symbol = symbols[speaker].clone();
                communication_round(
                    &speaker_symbol,
                    &mut symbols[hearer],
                    &ctx,
                    base.symbols.eta_align,
                    base.symbols.prune_threshold,
                );
                if round % eval_every == 0 {
                    points.push(eval(round, &env, &symbols));
                }
            }
            SymbolTrajectory { seed, points }
        })
        .collect()
}

/// Flat CSV of naming-game trajectories.
pub fn trajectories_to_csv(trajectories: &[SymbolTrajectory]) -> String {
    let mut out = String::from("seed,round,agreement,mean_cosine\n");
    for t in trajectories {
        for (round, agreement, cosine) in &t.points {
            out.push_str(&format!("{},{},{},{}\n", t.seed, round, agreement, cosine));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse_scenario, Variant};

    fn small_base() -> Scenario {
        let (s, _) = parse_scenario(
            r#"
            [world]
            m_e = 2
            m_i = 1
            dt = 0.5
            [world.relevant]
            kappa = 0.05
            sigma = 0.02

            [fitness]
            r_max = 0.4
            true_weights = [1.0, 1.0]
            width = 0.5
            capacity = 60.0
            death_rate = 0.05

            [modulation]
            c_gen = 0.02
            c_learn = 0.02
            sigma_min = 0.005
            sigma_max = 0.4

            [population]
            n0 = 30
            sigma_init = 0.02
            t_steps = 300

            [compare]
            sigma_grid = [0.02, 0.1]
            "#,
        )
        .unwrap();
        s
    }

    #[test]
    fn identical_fixed_variants_tie_at_half() {
        let base = small_base();
        let seeds: Vec<u64> = (0..10).collect();
        let fixed = fixed_scenario(&base, 0.05);
        let a: Vec<RunSummary> =
            seeds.iter().map(|&s| summarize(&fixed, "fixed", s).0).collect();
        let b: Vec<(f64, Vec<RunSummary>)> = vec![(0.05, a.clone())];
        let report = ComparisonReport::build(a, b);
        assert_eq!(report.win_rate, 0.5);
        assert_eq!(report.rank_sum, 0.5);
    }

    #[test]
    fn compare_report_is_deterministic() {
        let base = small_base();
        let seeds: Vec<u64> = (0..4).collect();
        let r1 = compare_experiment(&base, &base.compare.sigma_grid.clone(), &seeds);
        let r2 = compare_experiment(&base, &base.compare.sigma_grid.clone(), &seeds);
        assert_eq!(r1.to_csv(), r2.to_csv());
        assert_eq!(r1.n_pairs, 4);
    }

    #[test]
    fn gest_scenario_scales_goal_weight() {
        let base = small_base();
        let s = gest_scenario(&base, 0.25, true);
        assert_eq!(s.fitness.true_weights[0], 0.25);
        assert!(matches!(s.variant(), Variant::Gest { isolated: true, .. }));
        assert!(!s.evolve_flags().goal);
        let s2 = gest_scenario(&base, 0.25, false);
        assert!(s2.evolve_flags().goal);
    }

    #[test]
    fn naming_game_with_zero_eta_never_moves() {
        let mut base = small_base();
        base.symbols.enabled = true;
        base.symbols.eta_align = 0.0;
        base.symbols.random_init = true;
        base.population.n0 = 6;
        let trajectories = symbol_experiment(&base, 200, &[1, 2]);
        for t in &trajectories {
            let cosines: Vec<f64> = t.points.iter().map(|p| p.2).collect();
            for c in &cosines {
                assert!((c - cosines[0]).abs() < 1e-12, "cosine moved without updates");
            }
        }
    }

    #[test]
    fn naming_game_converges_with_full_adoption() {
        let mut base = small_base();
        base.symbols.enabled = true;
        base.symbols.eta_align = 1.0;
        base.symbols.prune_threshold = 0.0;
        base.symbols.random_init = true;
        base.population.n0 = 2;
        // Two agents with eta 1: after each disagreement the hearer copies
        // the speaker, so agreement reaches 1 and stays there.
        let trajectories = symbol_experiment(&base, 400, &[3]);
        let last = trajectories[0].points.last().unwrap();
        assert!(last.1 >= 0.99, "agreement {};", last.1);
    }
}
