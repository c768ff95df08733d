//! Threshold symbols compounded from sensed factors ("danger"), behavior
//! driven by them, and pairwise communication games that align symbols
//! across agents.

use serde::{Deserialize, Serialize};

use crate::stats::{pearson, Correlation, StatError};
use crate::world::ContextSample;

/// A linear-threshold compound over the sensed channel space: active when
/// the weighted sum of sensed values exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

/// Activation outcome with its margin (weighted sum minus threshold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub active: bool,
    pub margin: f64,
}

/// Evaluate a symbol on sensed channel values. A margin of exactly zero is
/// inactive.
pub fn symbol_activation(symbol: &Symbol, sensed: &[f64]) -> Activation {
    debug_assert_eq!(symbol.weights.len(), sensed.len());
    let z: f64 = symbol.weights.iter().zip(sensed).map(|(w, s)| w * s).sum::<f64>()
        - symbol.threshold;
    Activation { active: z > 0.0, margin: z }
}

/// Behavioral coupling of the symbol to fitness: while the symbol is
/// active the exposure value steps down (floored at zero); otherwise it
/// relaxes toward its baseline by the same step size.
pub fn evade_on_symbol(exposure: f64, active: bool, evade_step: f64, baseline: f64) -> f64 {
    if active {
        (exposure - evade_step).max(0.0)
    } else if exposure < baseline {
        (exposure + evade_step).min(baseline)
    } else {
        (exposure - evade_step).max(baseline)
    }
}

/// What happened in one naming-game round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub speaker_active: bool,
    pub hearer_active: bool,
    pub agree: bool,
    pub hearer_updated: bool,
}

/// One pairwise communication game. Both parties evaluate their symbol on
/// their view of a shared context; on disagreement the hearer's weights
/// and threshold move toward the speaker's by `eta_align` (a convex
/// combination), after which hearer weights below `prune_threshold` in
/// magnitude are zeroed. The speaker never changes.
pub fn communication_round(
    speaker: &Symbol,
    hearer: &mut Symbol,
    ctx: &ContextSample,
    eta_align: f64,
    prune_threshold: f64,
) -> GameOutcome {
    let s_act = symbol_activation(speaker, &ctx.speaker_view).active;
    let h_act = symbol_activation(hearer, &ctx.hearer_view).active;
    let agree = s_act == h_act;
    let mut updated = false;
    if !agree && eta_align > 0.0 {
        for (hw, sw) in hearer.weights.iter_mut().zip(&speaker.weights) {
            *hw = (1.0 - eta_align) * *hw + eta_align * sw;
        }
        hearer.threshold = (1.0 - eta_align) * hearer.threshold + eta_align * speaker.threshold;
        for hw in &mut hearer.weights {
            if hw.abs() < prune_threshold {
                *hw = 0.0;
            }
        }
        updated = true;
    }
    GameOutcome { speaker_active: s_act, hearer_active: h_act, agree, hearer_updated: updated }
}

/// Population-level alignment: mean pairwise activation agreement over the
/// given contexts (hearer views are not used; agreement is judged on the
/// shared values), and mean pairwise cosine similarity of symbol weights
/// (pairs involving a zero vector contribute 0).
pub fn alignment_metrics(
    symbols: &[&Symbol],
    contexts: &[ContextSample],
) -> Result<(f64, f64), StatError> {
    if symbols.len() < 2 {
        return Err(StatError::InsufficientData { need: 2, got: symbols.len() });
    }
    let mut agree_sum = 0.0;
    let mut agree_count = 0usize;
    let mut cos_sum = 0.0;
    let mut cos_count = 0usize;
    for i in 0..symbols.len() {
        for j in (i + 1)..symbols.len() {
            for ctx in contexts {
                let a = symbol_activation(symbols[i], &ctx.shared).active;
                let b = symbol_activation(symbols[j], &ctx.shared).active;
                agree_sum += if a == b { 1.0 } else { 0.0 };
                agree_count += 1;
            }
            cos_sum += cosine(&symbols[i].weights, &symbols[j].weights);
            cos_count += 1;
        }
    }
    let agreement = if agree_count == 0 { 1.0 } else { agree_sum / agree_count as f64 };
    Ok((agreement, cos_sum / cos_count as f64))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// How useful a symbol is as a danger signal: the correlation between the
/// activation fraction at step t and the drop of mean true fitness over
/// (t, t+lag]. Positive values mean activation predicts fitness drops.
/// A degenerate (constant) series reports the 0 sentinel with its flag.
pub fn symbol_utility(series: &[(f64, f64)], lag: usize) -> Result<Correlation, StatError> {
    if series.len() <= lag || lag == 0 {
        return Err(StatError::InsufficientData { need: lag + 1, got: series.len() });
    }
    let pairs: Vec<(f64, f64)> = (0..series.len() - lag)
        .map(|t| {
            let activation = series[t].0;
            let drop = series[t].1 - series[t + lag].1;
            (activation, drop)
        })
        .collect();
    pearson(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ctx(values: Vec<f64>) -> ContextSample {
        ContextSample { speaker_view: values.clone(), hearer_view: values.clone(), shared: values }
    }

    #[test]
    fn zero_weights_inactive_with_negative_margin() {
        let s = Symbol { weights: vec![0.0, 0.0], threshold: 0.1 };
        let a = symbol_activation(&s, &[3.0, -2.0]);
        assert!(!a.active);
        assert!((a.margin + 0.1).abs() < 1e-12);
    }

    #[test]
    fn activation_arithmetic() {
        let s = Symbol { weights: vec![1.0, 0.0], threshold: 0.5 };
        let a = symbol_activation(&s, &[0.7, 9.0]);
        assert!(a.active);
        assert!((a.margin - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_margin_is_inactive() {
        let s = Symbol { weights: vec![1.0], threshold: 0.5 };
        assert!(!symbol_activation(&s, &[0.5]).active);
    }

    #[test]
    fn evade_steps_and_floors() {
        assert!((evade_on_symbol(0.5, true, 0.2, 0.5) - 0.3).abs() < 1e-12);
        assert_eq!(evade_on_symbol(0.1, true, 0.2, 0.5), 0.0);
        assert_eq!(evade_on_symbol(0.5, false, 0.2, 0.5), 0.5);
        assert!((evade_on_symbol(0.1, false, 0.2, 0.5) - 0.3).abs() < 1e-12);
        // Relaxation never overshoots the baseline.
        assert_eq!(evade_on_symbol(0.45, false, 0.2, 0.5), 0.5);
    }

    #[test]
    fn agreement_means_no_update() {
        let speaker = Symbol { weights: vec![1.0, 0.0], threshold: 0.5 };
        let mut hearer = speaker.clone();
        let before = hearer.clone();
        let out = communication_round(&speaker, &mut hearer, &ctx(vec![0.9, 0.0]), 0.5, 0.0);
        assert!(out.agree);
        assert!(!out.hearer_updated);
        assert_eq!(hearer, before);
    }

    #[test]
    fn zero_learning_rate_never_updates() {
        let speaker = Symbol { weights: vec![1.0, 0.0], threshold: 0.5 };
        let mut hearer = Symbol { weights: vec![-1.0, 0.0], threshold: 0.5 };
        let before = hearer.clone();
        let out = communication_round(&speaker, &mut hearer, &ctx(vec![0.9, 0.0]), 0.0, 0.0);
        assert!(!out.agree);
        assert!(!out.hearer_updated);
        assert_eq!(hearer, before);
    }

    #[test]
    fn full_learning_rate_copies_speaker() {
        let speaker = Symbol { weights: vec![1.0, 0.3], threshold: 0.5 };
        let mut hearer = Symbol { weights: vec![-1.0, 0.0], threshold: -0.2 };
        let out = communication_round(&speaker, &mut hearer, &ctx(vec![0.9, 0.0]), 1.0, 0.0);
        assert!(out.hearer_updated);
        assert_eq!(hearer, speaker);
        // A second round on the same context now agrees.
        let again = communication_round(&speaker, &mut hearer, &ctx(vec![0.9, 0.0]), 1.0, 0.0);
        assert!(again.agree);
    }

    #[test]
    fn pruning_zeroes_small_weights() {
        let speaker = Symbol { weights: vec![1.0, 0.01], threshold: 0.5 };
        let mut hearer = Symbol { weights: vec![-0.5, 0.01], threshold: 0.5 };
        communication_round(&speaker, &mut hearer, &ctx(vec![0.9, 0.0]), 0.5, 0.02);
        assert_eq!(hearer.weights[1], 0.0);
        assert!((hearer.weights[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn alignment_perfect_when_shared() {
        let s = Symbol { weights: vec![1.0, 0.0], threshold: 0.5 };
        let symbols: Vec<&Symbol> = vec![&s, &s, &s];
        let contexts = vec![ctx(vec![0.9, 0.0]), ctx(vec![0.1, 0.0])];
        let (agreement, cos) = alignment_metrics(&symbols, &contexts).unwrap();
        assert_eq!(agreement, 1.0);
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_zero_on_disjoint_activations() {
        let a = Symbol { weights: vec![1.0, 0.0], threshold: 0.5 };
        let b = Symbol { weights: vec![-1.0, 0.0], threshold: -0.5 };
        let symbols: Vec<&Symbol> = vec![&a, &b];
        // a active, b inactive; then a inactive, b active.
        let contexts = vec![ctx(vec![0.9, 0.0]), ctx(vec![0.1, 0.0])];
        let (agreement, _) = alignment_metrics(&symbols, &contexts).unwrap();
        assert_eq!(agreement, 0.0);
    }

    #[test]
    fn alignment_needs_two_agents() {
        let s = Symbol { weights: vec![1.0], threshold: 0.0 };
        let symbols: Vec<&Symbol> = vec![&s];
        assert_eq!(
            alignment_metrics(&symbols, &[ctx(vec![0.0])]),
            Err(StatError::InsufficientData { need: 2, got: 1 })
        );
    }

    // Monte Carlo oracle: i.i.d. standard normal weight vectors in 8
    // dimensions have mean pairwise cosine near zero.
    #[test]
    fn random_symbol_cosine_near_zero() {
        let mut total = 0.0;
        let replicas = 10_000u64;
        for r in 0..replicas {
            let mut rng = substream(11, Domain::Metrics, r, 0);
            let symbols: Vec<Symbol> = (0..10)
                .map(|_| Symbol {
                    weights: (0..8).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
                    threshold: 0.0,
                })
                .collect();
            let refs: Vec<&Symbol> = symbols.iter().collect();
            let (_, cos) = alignment_metrics(&refs, &[]).unwrap();
            total += cos;
        }
        let mean = total / replicas as f64;
        assert!(mean.abs() < 0.05, "mean cosine {mean}");
    }

    #[test]
    fn utility_on_constructed_anticipatory_series() {
        // Activation flags exactly the steps before engineered sharp
        // drops; fitness then climbs back gradually.
        let lag = 1;
        let mut series = Vec::new();
        let mut f = 1.0;
        for t in 0..400usize {
            let drop_next = t % 20 == 10;
            series.push((if drop_next { 1.0 } else { 0.0 }, f));
            f = if drop_next { 0.4 } else { (f + 0.04).min(1.0) };
        }
        let u = symbol_utility(&series, lag).unwrap();
        assert!(u.value > 0.9, "utility {}", u.value);
    }

    // Monte Carlo oracle: activation independent of the fitness series
    // gives near-zero utility.
    #[test]
    fn utility_independent_is_near_zero() {
        let mut rng = substream(12, Domain::Metrics, 0, 0);
        let series: Vec<(f64, f64)> = (0..10_000)
            .map(|_| (if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }, rng.random::<f64>()))
            .collect();
        let u = symbol_utility(&series, 3).unwrap();
        assert!(u.value.abs() < 0.05, "utility {}", u.value);
    }

    #[test]
    fn utility_constant_activation_is_degenerate() {
        let series: Vec<(f64, f64)> = (0..100).map(|t| (1.0, (t as f64).sin())).collect();
        let u = symbol_utility(&series, 2).unwrap();
        assert!(u.degenerate);
        assert_eq!(u.value, 0.0);
    }

    #[test]
    fn utility_insufficient_data_errors() {
        let series = vec![(1.0, 1.0), (0.0, 1.0)];
        assert!(symbol_utility(&series, 5).is_err());
    }
}
