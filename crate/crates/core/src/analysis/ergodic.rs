//! Birkhoff averages of integer exchanges and the Keane condition.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::construction::{ConstructionRun, Phase};
use crate::induction::{Iet, IntExchange};
use crate::perm::{hyperelliptic_permutation, LabeledPermutation, Symbol};
use crate::sampling::substream;

/// Fraction of the `n` points `T^offset(x), ..., T^(offset+n-1)(x)` that lie
/// in the interval labelled `symbol`.
pub fn birkhoff_average(t: &IntExchange, x: i128, offset: u64, n: u64, symbol: Symbol) -> f64 {
    let mut y = x;
    for _ in 0..offset {
        y = t.apply(y);
    }
    let mut hits = 0u64;
    for _ in 0..n {
        hits += (t.symbol_at(y) == symbol) as u64;
        y = t.apply(y);
    }
    hits as f64 / n.max(1) as f64
}

/// Observables for `birkhoff_averages`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Indicator of the interval labelled by the symbol.
    Interval(Symbol),
    /// Indicator of `[0, c)`.
    Prefix(BigRational),
    Constant,
}

/// Averages `(1/n) sum_(j<n) f(T^j x)` for each point, iterated exactly on
/// a common integer scale.
pub fn birkhoff_averages(t: &Iet, points: &[BigRational], observable: &Observable, n: u64) -> Result<Vec<f64>, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::Domain("averages need n >= 1".into()));
    }
    let total = t.total();
    let mut scale = BigInt::one();
    for q in t.lengths().iter().chain(points) {
        scale = scale.lcm(q.denom());
    }
    let big = |q: &BigRational| (q * BigRational::from_integer(scale.clone())).to_integer();
    if big(&total).bits() > 120 {
        return Err(AnalysisError::Domain("common denominator too large for 128-bit iteration".into()));
    }
    let lens: Vec<i128> = t.lengths().iter().map(|q| big(q).to_i128().expect("checked size")).collect();
    let int = IntExchange::from_lengths(&lens, t.perm());
    let threshold = match observable {
        Observable::Prefix(c) => Some((c * BigRational::from_integer(scale.clone())).ceil().to_integer().to_i128().unwrap_or(i128::MAX)),
        _ => None,
    };
    points
        .iter()
        .map(|x| {
            if x.is_negative() || *x >= total {
                return Err(AnalysisError::Domain(format!("point {x} outside the domain")));
            }
            let mut y = big(x).to_i128().expect("inside the domain");
            let mut hits = 0u64;
            for _ in 0..n {
                hits += match observable {
                    Observable::Interval(s) => (int.symbol_at(y) == *s) as u64,
                    Observable::Prefix(_) => (y < threshold.expect("prefix")) as u64,
                    Observable::Constant => 1,
                };
                y = int.apply(y);
            }
            Ok(hits as f64 / n as f64)
        })
        .collect()
}

/// Outcome of searching for a Keane violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeaneCollision {
    /// Index (0-based, left to right) of the starting discontinuity.
    pub from: usize,
    /// Index of the discontinuity that is hit.
    pub to: usize,
    pub n: u64,
}

/// First `n <= max_iter` with `T^n(beta_i) = beta_j` for interior
/// discontinuities `beta_i, beta_j`, scanning `n` in increasing order.
pub fn keane_check(t: &IntExchange, max_iter: u64) -> Option<KeaneCollision> {
    let disc = t.discontinuities();
    let mut orbit: Vec<i128> = disc.to_vec();
    for n in 1..=max_iter {
        for (i, y) in orbit.iter_mut().enumerate() {
            *y = t.apply(*y);
            if let Ok(j) = disc.binary_search(y) {
                return Some(KeaneCollision { from: i, to: j, n });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffConfig {
    /// Length of each average.
    pub n: u64,
    pub points_per_column: usize,
    /// Largest random offset applied before averaging.
    pub max_offset: u64,
    /// A checkpoint serves a cluster once each of its columns sums to at
    /// least `column_factor * n`.
    pub column_factor: u64,
    pub symbol: Symbol,
    pub seed: u64,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        Self { n: 100_000, points_per_column: 10, max_offset: 2_000_000, column_factor: 10, symbol: 1, seed: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAverages {
    /// Columns of the cluster, 0-based.
    pub columns: Vec<usize>,
    /// Stage and phase of the checkpoint whose towers were sampled.
    pub stage: usize,
    pub phase: Phase,
    pub averages: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub config: BirkhoffConfig,
    /// Integer lengths of the exchange that was iterated.
    pub lengths: Vec<String>,
    pub clusters: Vec<ClusterAverages>,
    pub gap: f64,
    pub spread: f64,
    pub separated: bool,
}

impl SeparationReport {
    fn assemble(config: BirkhoffConfig, lengths: Vec<String>, clusters: Vec<ClusterAverages>) -> Self {
        let gap = (clusters[0].mean - clusters[clusters.len() - 1].mean).abs();
        let spread = clusters.iter().map(|c| c.spread).fold(0.0, f64::max);
        Self { config, lengths, gap, spread, separated: gap > 10.0 * spread, clusters }
    }
}

fn summarize(averages: Vec<f64>) -> (f64, f64) {
    let mean = averages.iter().sum::<f64>() / averages.len().max(1) as f64;
    let max = averages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = averages.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, max - min)
}

/// Birkhoff averages along the towers of the first and last clusters of a
/// constructed exchange.
///
/// The construction's matrix is truncated at the earliest checkpoint where
/// both clusters have towers taller than `column_factor * n`. The exchange
/// with lengths `M 1` for that truncation `M` is iterated from random points
/// on the bases of the towers of each cluster, as seen at the checkpoint
/// serving that cluster. Distinct ergodic measures show up as a gap between
/// the cluster means far larger than the spread inside each cluster.
pub fn two_measure_evidence(run: &ConstructionRun, cfg: &BirkhoffConfig) -> Result<SeparationReport, AnalysisError> {
    let d = run.d();
    let threshold = BigInt::from(cfg.column_factor) * BigInt::from(cfg.n);
    let checkpoints: Vec<(usize, Phase, &crate::matrix::IntMatrix, &LabeledPermutation)> = run
        .stages
        .iter()
        .flat_map(|s| s.phases.iter().zip(&s.checkpoints).map(move |(p, c)| (s.k, p.phase, c, &p.end)))
        .collect();
    let groups = [(0..d - 2).collect::<Vec<_>>(), (d - 2..d).collect::<Vec<_>>()];
    let picks: Vec<usize> = groups
        .iter()
        .map(|cols| {
            checkpoints
                .iter()
                .position(|(_, _, m, _)| cols.iter().all(|&j| m.column_sum(j) >= threshold))
                .ok_or_else(|| AnalysisError::Domain("towers never reach the requested height".into()))
        })
        .collect::<Result<_, _>>()?;
    let top = *picks.iter().max().expect("two clusters");
    let truncation = checkpoints[top].2;
    let lambda: Vec<BigInt> = (0..d).map(|i| (0..d).map(|j| truncation.get(i, j)).sum()).collect();
    let total: BigInt = lambda.iter().sum();
    if total.bits() > 120 {
        return Err(AnalysisError::Domain("truncated exchange is too long for 128-bit iteration".into()));
    }
    let lens: Vec<i128> = lambda.iter().map(|x| x.to_i128().expect("checked size")).collect();
    let t = IntExchange::from_lengths(&lens, &run.start_permutation());
    let lambda_q: Vec<BigRational> = lambda.iter().map(|x| BigRational::from_integer(x.clone())).collect();

    let mut clusters = Vec::new();
    for (g, (cols, &pick)) in groups.iter().zip(&picks).enumerate() {
        let (stage, phase, m, end) = checkpoints[pick];
        let x = m
            .to_rational()
            .solve(&lambda_q)
            .ok_or_else(|| AnalysisError::Domain("singular checkpoint matrix".into()))?;
        let base: Vec<i128> = x.iter().map(|v| v.to_integer().to_i128().expect("bounded by lambda")).collect();
        let mut starts = vec![0i128; d];
        let mut acc = 0;
        for &s in end.top() {
            starts[s as usize - 1] = acc;
            acc += base[s as usize - 1];
        }
        let mut rng = substream(cfg.seed, g as u64);
        let mut averages = Vec::new();
        for &j in cols {
            let height = m.column_sum(j).to_u64().unwrap_or(u64::MAX);
            for _ in 0..cfg.points_per_column {
                let y = starts[j] + rng.gen_range(0..base[j].max(1));
                let offset = rng.gen_range(0..=height.saturating_sub(cfg.n).min(cfg.max_offset));
                averages.push(birkhoff_average(&t, y, offset, cfg.n, cfg.symbol));
            }
        }
        let (mean, spread) = summarize(averages.clone());
        clusters.push(ClusterAverages { columns: cols.clone(), stage, phase, averages, mean, spread });
    }
    Ok(SeparationReport::assemble(cfg.clone(), lens.iter().map(|l| l.to_string()).collect(), clusters))
}

/// The same statistic for a two-interval exchange with consecutive
/// Fibonacci lengths, which is uniquely ergodic: random starting points are
/// split into two groups, and the gap between the group means should stay
/// within the spread.
pub fn golden_control(cfg: &BirkhoffConfig) -> SeparationReport {
    let (mut a, mut b) = (1i128, 1i128);
    while b < 1_000_000_000_000 {
        (a, b) = (b, a + b);
    }
    let lens = [b, a];
    let t = IntExchange::from_lengths(&lens, &hyperelliptic_permutation(2).expect("d = 2"));
    let mut clusters = Vec::new();
    for g in 0..2 {
        let mut rng = substream(cfg.seed, 100 + g as u64);
        let averages: Vec<f64> = (0..2 * cfg.points_per_column)
            .map(|_| {
                let y = rng.gen_range(0..t.total());
                let offset = rng.gen_range(0..=cfg.max_offset);
                birkhoff_average(&t, y, offset, cfg.n, cfg.symbol)
            })
            .collect();
        let (mean, spread) = summarize(averages.clone());
        clusters.push(ClusterAverages { columns: vec![g], stage: 0, phase: Phase::Transition, averages, mean, spread });
    }
    SeparationReport::assemble(cfg.clone(), lens.iter().map(|l| l.to_string()).collect(), clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rat;

    #[test]
    fn half_rotation_collides_at_two() {
        let t = IntExchange::from_lengths(&[1, 1], &hyperelliptic_permutation(2).unwrap());
        assert_eq!(keane_check(&t, 10), Some(KeaneCollision { from: 0, to: 0, n: 2 }));
    }

    #[test]
    fn rational_rotation_eventually_collides() {
        // rotation by 3/7 has period 7
        let t = IntExchange::from_lengths(&[4, 3], &hyperelliptic_permutation(2).unwrap());
        assert_eq!(keane_check(&t, 6), None);
        assert_eq!(keane_check(&t, 7).map(|c| c.n), Some(7));
    }

    #[test]
    fn rotation_average_is_length() {
        let t = IntExchange::from_lengths(&[4, 3], &hyperelliptic_permutation(2).unwrap());
        assert_eq!(birkhoff_average(&t, 0, 0, 7000, 1), 4.0 / 7.0);
    }

    #[test]
    fn periodic_rotation_average() {
        // x -> x + 1/3 mod 1; the orbit of 0 is 0, 1/3, 2/3
        let t = Iet::new(vec![rat(2, 3), rat(1, 3)], hyperelliptic_permutation(2).unwrap()).unwrap();
        let avg = birkhoff_averages(&t, &[rat(0, 1)], &Observable::Interval(1), 3).unwrap();
        assert_eq!(avg, vec![2.0 / 3.0]);
        let prefix = birkhoff_averages(&t, &[rat(0, 1)], &Observable::Prefix(rat(1, 2)), 3).unwrap();
        assert_eq!(prefix, vec![2.0 / 3.0]);
        let one = birkhoff_averages(&t, &[rat(1, 7), rat(5, 11)], &Observable::Constant, 50).unwrap();
        assert_eq!(one, vec![1.0, 1.0]);
        assert!(birkhoff_averages(&t, &[rat(1, 1)], &Observable::Constant, 5).is_err());
        assert!(birkhoff_averages(&t, &[rat(0, 1)], &Observable::Constant, 0).is_err());
    }

    #[test]
    fn golden_control_is_not_separated() {
        let cfg = BirkhoffConfig { n: 20_000, max_offset: 10_000, ..Default::default() };
        let r = golden_control(&cfg);
        let phi2 = 1.0 / (1.5 + 1.25f64.sqrt());
        assert!((r.clusters[0].mean - (1.0 - phi2)).abs() < 1e-3, "{r:?}");
        assert!(!r.separated);
    }
}
