//! Small statistics helpers shared by the estimator, symbols, and harness.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("insufficient data: need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },
}

/// A Pearson correlation together with a degeneracy marker. A constant
/// series has no defined correlation; we report 0 and set the flag rather
/// than propagate NaN into metrics files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

impl Correlation {
    pub const DEGENERATE: Correlation = Correlation { value: 0.0, degenerate: true };
}

/// Pearson correlation of paired samples. Errors on fewer than two pairs;
/// returns the degenerate sentinel when either coordinate is constant.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<Correlation, StatError> {
    if pairs.len() < 2 {
        return Err(StatError::InsufficientData { need: 2, got: pairs.len() });
    }
    let n = pairs.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for &(x, y) in pairs {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Correlation::DEGENERATE);
    }
    Ok(Correlation { value: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), degenerate: false })
}

/// Running sums of one step's worth of (x, y) pairs. Summing these over a
/// window reconstructs the pooled Pearson correlation without storing the
/// pairs themselves.
#[derive(Debug, Clone, Copy, Default)]
pub struct PairSums {
    pub n: f64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl PairSums {
    pub fn add(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn merge(&mut self, other: &PairSums) {
        self.n += other.n;
        self.sx += other.sx;
        self.sy += other.sy;
        self.sxx += other.sxx;
        self.syy += other.syy;
        self.sxy += other.sxy;
    }

    pub fn correlation(&self) -> Correlation {
        if self.n < 2.0 {
            return Correlation::DEGENERATE;
        }
        let vx = self.sxx - self.sx * self.sx / self.n;
        let vy = self.syy - self.sy * self.sy / self.n;
        let cov = self.sxy - self.sx * self.sy / self.n;
        if vx <= 1e-300 || vy <= 1e-300 {
            return Correlation::DEGENERATE;
        }
        Correlation { value: (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0), degenerate: false }
    }
}

/// Sliding window of per-step pair sums; `correlation` pools the last
/// `window` steps. Used for the in-run coupling diagnostic.
#[derive(Debug, Clone)]
pub struct WindowedCorrelation {
    window: usize,
    steps: std::collections::VecDeque<PairSums>,
}

impl WindowedCorrelation {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1), steps: std::collections::VecDeque::new() }
    }

    pub fn push(&mut self, sums: PairSums) {
        if self.steps.len() == self.window {
            self.steps.pop_front();
        }
        self.steps.push_back(sums);
    }

    pub fn correlation(&self) -> Correlation {
        let mut total = PairSums::default();
        for s in &self.steps {
            total.merge(s);
        }
        total.correlation()
    }
}

/// Least-squares slope of y against x.
pub fn slope(points: &[(f64, f64)]) -> Result<f64, StatError> {
    if points.len() < 2 {
        return Err(StatError::InsufficientData { need: 2, got: points.len() });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(sxy / sxx)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(pairs: &[(f64, f64)]) -> Result<Correlation, StatError> {
    if pairs.len() < 2 {
        return Err(StatError::InsufficientData { need: 2, got: pairs.len() });
    }
    let xr = ranks(pairs.iter().map(|p| p.0));
    let yr = ranks(pairs.iter().map(|p| p.1));
    let ranked: Vec<(f64, f64)> = xr.into_iter().zip(yr).collect();
    pearson(&ranked)
}

fn ranks<I: Iterator<Item = f64>>(values: I) -> Vec<f64> {
    let vals: Vec<f64> = values.collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0.0; vals.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && vals[order[j + 1]] == vals[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Mann-Whitney rank-sum statistic U for sample `a` against sample `b`,
/// normalized to [0, 1] (probability that a random element of `a` exceeds
/// one of `b`, ties counted half).
pub fn rank_sum_u(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.5;
    }
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u / (a.len() as f64 * b.len() as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_identity_is_one() {
        let pairs: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, i as f64)).collect();
        let c = pearson(&pairs).unwrap();
        assert!(!c.degenerate);
        assert!((c.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_anticorrelation_is_minus_one() {
        let pairs: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, -(i as f64) + 3.0)).collect();
        let c = pearson(&pairs).unwrap();
        assert!((c.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_constant_is_degenerate() {
        let pairs = vec![(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)];
        assert_eq!(pearson(&pairs).unwrap(), Correlation::DEGENERATE);
    }

    #[test]
    fn pearson_too_few_samples_errors() {
        assert_eq!(
            pearson(&[(1.0, 2.0)]),
            Err(StatError::InsufficientData { need: 2, got: 1 })
        );
    }

    #[test]
    fn windowed_matches_direct_pooling() {
        let mut w = WindowedCorrelation::new(3);
        let mut all: Vec<(f64, f64)> = Vec::new();
        for step in 0..3 {
            let mut sums = PairSums::default();
            for i in 0..5 {
                let x = (step * 5 + i) as f64;
                let y = 2.0 * x + (i as f64) * 0.1;
                sums.add(x, y);
                all.push((x, y));
            }
            w.push(sums);
        }
        let direct = pearson(&all).unwrap().value;
        assert!((w.correlation().value - direct).abs() < 1e-10);
    }

    #[test]
    fn windowed_evicts_old_steps() {
        let mut w = WindowedCorrelation::new(2);
        for step in 0..5 {
            let mut sums = PairSums::default();
            sums.add(step as f64, step as f64);
            sums.add(step as f64 + 0.5, step as f64 + 0.4);
            w.push(sums);
        }
        // Only steps 3 and 4 remain; pooled correlation is still defined.
        assert!(!w.correlation().degenerate);
    }

    #[test]
    fn slope_of_line_recovers_coefficient() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.5 * i as f64 + 1.0)).collect();
        assert!((slope(&pts).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn spearman_monotone_is_one() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, (i as f64).exp())).collect();
        assert!((spearman(&pairs).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_symmetric_samples() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        assert!((rank_sum_u(&a, &b) - 0.5).abs() < 1e-12);
        let c = [10.0, 11.0];
        assert_eq!(rank_sum_u(&c, &a), 1.0);
    }
}
