//! Sampling checks of the probabilistic lemmas: balance times, the Jacobian
//! of the projective action, and large deviations of dependent coin flips.

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{fit_line, Claim, LineFit, McReport, Verdict, Z95_ONE_SIDED};
use super::AnalysisError;
use crate::geometry::{
    barycentric, jacobian_integral_fraction, sample_image, sample_simplex, simplex_volume_fraction,
    vertex_simplex_fraction,
};
use crate::matrix::{big_to_f64, rat_to_f64, IntMatrix};
use crate::perm::{rauzy_class, LabeledPermutation, Side, Symbol};
use crate::sampling::{parallel_chunks, DEFAULT_CHUNK};

/// Rauzy class as a transition table for fast floating-point induction.
pub(super) struct FastClass {
    /// `(last top, last bottom)` per vertex, 0-based symbols.
    pub(super) contest: Vec<(usize, usize)>,
    /// Target vertex when the top / bottom wins.
    pub(super) next: Vec<[usize; 2]>,
    pub(super) start: usize,
}

impl FastClass {
    pub(super) fn new(pi: &LabeledPermutation) -> Result<Self, AnalysisError> {
        let g = rauzy_class(pi)?;
        let n = g.vertices.len();
        let mut next = vec![[usize::MAX; 2]; n];
        for e in &g.edges {
            let k = match e.side {
                Side::TopWins => 0,
                Side::BottomWins => 1,
            };
            next[e.source][k] = e.target;
        }
        let idx = |s: Symbol| s as usize - 1;
        let contest = g.vertices.iter().map(|v| (idx(v.last_top()), idx(v.last_bottom()))).collect();
        let start = g.index_of(pi).expect("seed is in its class");
        Ok(Self { contest, next, start })
    }
}

/// Parameters of `mc_balance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    pub zeta: f64,
    /// Norm growth factor per unit of `m`.
    pub k_factor: f64,
    pub m_max: usize,
    pub samples: usize,
    pub seed: u64,
    /// Induction first runs until the norm reaches this value; the matrix
    /// reached there plays the role of the given matrix `M`.
    pub warmup_norm: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub config: BalanceConfig,
    /// Failure fraction for `m = 1..=m_max`.
    pub failures: Vec<McReport>,
    /// Fit of `ln(failure)` against `m`, over the `m` with at least five failures.
    pub fit: Option<LineFit>,
    pub sigma_hat: f64,
    /// One-sided 95% upper confidence bound on `sigma`.
    pub sigma_upper: f64,
    /// Nearly every sample failed at `m_max`: `zeta` is too small for the class.
    pub saturated: bool,
    pub verdict: Verdict,
}

/// For each sampled length vector, the norm growth (relative to the end of
/// the warm-up) at which the matrix first becomes `zeta`-balanced, or
/// infinity if that does not happen before the growth `cap`.
fn balance_growth<R: Rng + ?Sized>(class: &FastClass, d: usize, cfg: &BalanceConfig, cap: f64, rng: &mut R) -> f64 {
    let mut len = sample_simplex(rng, d);
    let mut cols = vec![1u128; d];
    let mut v = class.start;
    let mut norm = 1u128;
    let mut base: Option<u128> = None;
    loop {
        if base.is_none() && norm >= cfg.warmup_norm as u128 {
            base = Some(norm);
        }
        if let Some(b) = base {
            let growth = norm as f64 / b as f64;
            if growth > cap {
                return f64::INFINITY;
            }
            let min = *cols.iter().min().expect("d >= 2");
            if norm as f64 <= cfg.zeta * min as f64 {
                return growth;
            }
        }
        let (a, b) = class.contest[v];
        let (w, l, k) = if len[a] > len[b] { (a, b, 0) } else { (b, a, 1) };
        len[w] -= len[l];
        cols[l] += cols[w];
        norm = norm.max(cols[l]);
        v = class.next[v][k];
        if len[w] <= 0.0 {
            // floating-point tie; the sample has no well-defined path
            return f64::NAN;
        }
    }
}

/// Fraction of starting points whose induction fails to produce a
/// `zeta`-balanced matrix while the norm grows by the factor `K^m`.
pub fn mc_balance(pi: &LabeledPermutation, cfg: &BalanceConfig) -> Result<BalanceReport, AnalysisError> {
    if !(cfg.zeta > 1.0 && cfg.k_factor > 1.0) {
        return Err(AnalysisError::Domain("mc_balance needs zeta > 1 and K > 1".into()));
    }
    let class = FastClass::new(pi)?;
    let d = pi.d();
    let cap = cfg.k_factor.powi(cfg.m_max as i32);
    let growths: Vec<f64> = parallel_chunks(cfg.seed, cfg.samples, DEFAULT_CHUNK, |rng, n| {
        (0..n).map(|_| balance_growth(&class, d, cfg, cap, rng)).collect::<Vec<_>>()
    })
    .concat();
    let valid: Vec<f64> = growths.into_iter().filter(|g| !g.is_nan()).collect();
    let n = valid.len();
    let failures: Vec<McReport> = (1..=cfg.m_max)
        .map(|m| {
            let bound = cfg.k_factor.powi(m as i32);
            let hits = valid.iter().filter(|&&g| g > bound).count();
            McReport::proportion(hits, n, cfg.seed, Claim::UpperBound, 1.0)
        })
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (i, r) in failures.iter().enumerate() {
        let hits = (r.estimate * n as f64).round();
        if hits >= 5.0 {
            xs.push((i + 1) as f64);
            ys.push(r.estimate.ln());
            // delta method: var(ln p) = (1 - p) / (n p)
            ws.push(hits / (1.0 - r.estimate).max(1e-12));
        }
    }
    let fit = fit_line(&xs, &ys, Some(&ws));
    let saturated = failures.last().is_some_and(|r| r.estimate > 0.99);
    let (sigma_hat, sigma_upper, verdict) = match &fit {
        Some(f) => {
            // known-variance weights give var(slope) = 1 / Sxx_w
            let sw: f64 = ws.iter().sum();
            let mx = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
            let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
            let se = (1.0 / sxx).sqrt().max(f.slope_stderr);
            let upper = (f.slope + Z95_ONE_SIDED * se).exp();
            let v = if upper < 1.0 { Verdict::Consistent } else if saturated { Verdict::Violated } else { Verdict::Inconclusive };
            (f.slope.exp(), upper, v)
        }
        None => (f64::NAN, f64::NAN, Verdict::Inconclusive),
    };
    Ok(BalanceReport { config: cfg.clone(), failures, fit, sigma_hat, sigma_upper, saturated, verdict })
}

/// Compares the share of uniform points of `M Delta` whose preimage lies in
/// the simplex `w` with the exact integral of the Jacobian over `w`,
/// normalized by the volume of `M Delta`.
pub fn mc_jacobian_pushforward(
    m: &IntMatrix,
    w: &[Vec<BigRational>],
    samples: usize,
    seed: u64,
) -> Result<McReport, AnalysisError> {
    let d = m.cols();
    if w.len() != d || w.iter().any(|v| v.len() != d) {
        return Err(AnalysisError::Domain(format!("region needs {d} vertices in dimension {d}")));
    }
    if vertex_simplex_fraction(w).is_zero() {
        return Err(AnalysisError::Domain("region has zero volume".into()));
    }
    let expected = rat_to_f64(&(jacobian_integral_fraction(m, w) / simplex_volume_fraction(m)?));
    let vertices = m.normalized_columns_f64();
    let sums: Vec<f64> = m.column_sums().iter().map(big_to_f64).collect();
    let wf: Vec<Vec<f64>> = w.iter().map(|v| v.iter().map(rat_to_f64).collect()).collect();
    let hits: usize = parallel_chunks(seed, samples, DEFAULT_CHUNK, |rng, n| {
        (0..n)
            .filter(|_| {
                let (_, x) = sample_image(rng, &vertices, &sums);
                barycentric(&wf, &x).is_some_and(|b| b.iter().all(|&t| t >= 0.0))
            })
            .count()
    })
    .into_iter()
    .sum();
    Ok(McReport::proportion(hits, samples, seed, Claim::Equality, expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dependence {
    /// Independent flips with success probability `rho`.
    Independent,
    /// Success probability `rho` right after a failure and `2 rho` right
    /// after a success: always at least `rho`, exactly `rho` along a run of
    /// failures.
    AdversarialMarkov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub rho: f64,
    pub dependence: Dependence,
    /// Length of the simulated sequences.
    pub length: usize,
    /// First index of the failure windows; earlier flips form the past.
    pub window_start: usize,
    /// The large-deviation threshold is `(rho - epsilon) l`.
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub config: DecayConfig,
    /// Probability that flips `s..s+L-1` all fail, for `L = 1..`; checked
    /// against `(1 - rho)^L`, as an equality for independent flips and as an
    /// upper bound otherwise.
    pub windows: Vec<McReport>,
    /// Frequency of at most `(rho - epsilon) l` successes among the first
    /// `l` flips, at `l = deviation_lengths[i]`.
    pub deviation_lengths: Vec<usize>,
    pub deviations: Vec<McReport>,
    /// `exp` of the slope of `ln(frequency)` against `l`.
    pub tau_hat: f64,
    pub verdict: Verdict,
}

pub fn prob_decay_sim(cfg: &DecayConfig) -> Result<DecayReport, AnalysisError> {
    if !(cfg.rho > 0.0 && cfg.rho < 0.5) {
        return Err(AnalysisError::Domain(format!("rho = {} outside (0, 1/2)", cfg.rho)));
    }
    if cfg.window_start >= cfg.length {
        return Err(AnalysisError::Domain("window starts after the sequence ends".into()));
    }
    let max_window = cfg.length - cfg.window_start;
    let step = (cfg.length / 10).max(1);
    let deviation_lengths: Vec<usize> = (1..=10).map(|i| i * step).filter(|&l| l <= cfg.length).collect();
    // per sample: longest failure run from the window start, and the success
    // counts at each deviation length
    let per_chunk = parallel_chunks(cfg.seed, cfg.samples, DEFAULT_CHUNK, |rng, n| {
        let mut runs = vec![0usize; max_window + 1];
        let mut dev = vec![0usize; deviation_lengths.len()];
        for _ in 0..n {
            let mut last = false;
            let mut successes = 0usize;
            let mut run = 0usize;
            let mut open = true;
            let mut next_dev = 0;
            for i in 0..cfg.length {
                let p = match (cfg.dependence, last) {
                    (Dependence::AdversarialMarkov, true) => 2.0 * cfg.rho,
                    _ => cfg.rho,
                };
                last = rng.gen::<f64>() < p;
                successes += last as usize;
                if i >= cfg.window_start && open {
                    if last {
                        open = false;
                    } else {
                        run += 1;
                    }
                }
                while next_dev < deviation_lengths.len() && deviation_lengths[next_dev] == i + 1 {
                    if (successes as f64) <= (cfg.rho - cfg.epsilon) * (i + 1) as f64 {
                        dev[next_dev] += 1;
                    }
                    next_dev += 1;
                }
            }
            runs[run] += 1;
        }
        (runs, dev)
    });
    let mut runs = vec![0usize; max_window + 1];
    let mut dev = vec![0usize; deviation_lengths.len()];
    for (r, d) in per_chunk {
        runs.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        dev.iter_mut().zip(d).for_each(|(a, b)| *a += b);
    }
    let claim = match cfg.dependence {
        Dependence::Independent => Claim::Equality,
        Dependence::AdversarialMarkov => Claim::UpperBound,
    };
    let windows: Vec<McReport> = (1..=max_window)
        .map(|l| {
            let hits: usize = runs[l..].iter().sum();
            McReport::proportion(hits, cfg.samples, cfg.seed, claim, (1.0 - cfg.rho).powi(l as i32))
        })
        .collect();
    let deviations: Vec<McReport> = dev
        .iter()
        .map(|&h| McReport::proportion(h, cfg.samples, cfg.seed, Claim::UpperBound, 1.0))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = deviation_lengths
        .iter()
        .zip(&dev)
        .filter(|(_, &h)| h >= 5)
        .map(|(&l, &h)| (l as f64, (h as f64 / cfg.samples as f64).ln()))
        .unzip();
    let tau_hat = fit_line(&xs, &ys, None).map_or(f64::NAN, |f| f.slope.exp());
    let verdict = if cfg.samples == 0 {
        Verdict::Inconclusive
    } else if windows.iter().any(|r| r.verdict == Verdict::Violated) {
        Verdict::Violated
    } else {
        Verdict::Consistent
    };
    Ok(DecayReport { config: cfg.clone(), windows, deviation_lengths, deviations, tau_hat, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{rat, VisitationMatrix};
    use crate::perm::hyperelliptic_permutation;

    #[test]
    fn two_letter_balance_decays() {
        let cfg = BalanceConfig { zeta: 10.0, k_factor: 2.0, m_max: 6, samples: 4000, seed: 3, warmup_norm: 4 };
        let r = mc_balance(&hyperelliptic_permutation(2).unwrap(), &cfg).unwrap();
        let f: Vec<f64> = r.failures.iter().map(|x| x.estimate).collect();
        assert!(f.windows(2).all(|w| w[1] <= w[0]));
        assert!(f[5] < 0.05, "{f:?}");
    }

    #[test]
    fn tiny_zeta_saturates() {
        let cfg = BalanceConfig { zeta: 1.0001, k_factor: 2.0, m_max: 3, samples: 500, seed: 3, warmup_norm: 8 };
        let r = mc_balance(&hyperelliptic_permutation(4).unwrap(), &cfg).unwrap();
        assert!(r.saturated);
        let empty = BalanceConfig { samples: 0, ..cfg };
        assert_eq!(mc_balance(&hyperelliptic_permutation(4).unwrap(), &empty).unwrap().verdict, Verdict::Inconclusive);
    }

    fn unit_vertices(d: usize) -> Vec<Vec<BigRational>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { rat(1, 1) } else { rat(0, 1) }).collect()).collect()
    }

    #[test]
    fn identity_pushforward_is_volume() {
        // W = the half of the triangle with z_1 >= z_2
        let w = vec![vec![rat(1, 1), rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 2), rat(0, 1)], vec![rat(0, 1), rat(0, 1), rat(1, 1)]];
        let r = mc_jacobian_pushforward(&IntMatrix::identity(3), &w, 20_000, 1).unwrap();
        assert_eq!(r.claim_bound, 0.5);
        assert_eq!(r.verdict, Verdict::Consistent);
    }

    #[test]
    fn elementary_pushforward() {
        let m = VisitationMatrix::elementary(3, 1, 2).into_matrix();
        let w = vec![vec![rat(1, 1), rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 2), rat(0, 1)], vec![rat(0, 1), rat(0, 1), rat(1, 1)]];
        let r = mc_jacobian_pushforward(&m, &w, 50_000, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "{r:?}");
        let flat = vec![unit_vertices(3)[0].clone(); 3];
        assert!(mc_jacobian_pushforward(&m, &flat, 10, 2).is_err());
    }

    #[test]
    fn independent_windows_match() {
        let cfg = DecayConfig {
            rho: 0.2,
            dependence: Dependence::Independent,
            length: 40,
            window_start: 5,
            epsilon: 0.1,
            samples: 20_000,
            seed: 9,
        };
        let r = prob_decay_sim(&cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert!(r.tau_hat < 1.0);
        let bad = DecayConfig { rho: 0.7, ..cfg };
        assert!(prob_decay_sim(&bad).is_err());
    }
}
