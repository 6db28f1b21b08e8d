//! Measured proportions behind the shadow and neighborhood estimates:
//! illumination of a freedom family inside a slice, and survival of the
//! restriction neighborhood under left restriction.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::montecarlo::FastClass;
use super::report::{Claim, McReport};
use super::AnalysisError;
use crate::construction::{gen_freedom_lhs, ConstructionRun, Phase, PhaseContext};
use crate::geometry::{illuminated, sample_simplex, IlluminationFamily};
use crate::matrix::{big_to_f64, rat_to_f64, IntMatrix};
use crate::perm::{is_lhs_restriction_move, Symbol};
use crate::sampling::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowConfig {
    pub samples: usize,
    pub seed: u64,
    /// Freedom paths drawn besides the run's own.
    pub alternatives: usize,
    /// Points count as lying in `Delta_c` when `|x_(d-1) + x_d - c|` is at
    /// most half this width.
    pub slab: f64,
    /// Rejection draws per requested sample before giving up.
    pub patience: usize,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        Self { samples: 400, seed: 11, alternatives: 2, slab: 0.02, patience: 2000 }
    }
}

fn check_slice(c: f64) -> Result<(), AnalysisError> {
    if (0.1..=0.9).contains(&c) {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!("slice c = {c} outside [0.1, 0.9]")))
    }
}

fn slice_value(v: &[f64]) -> f64 {
    v[v.len() - 2] + v[v.len() - 1]
}

/// Fraction of points of `family ∩ Delta_c` whose line in direction `phi`
/// meets the first face of the family. Points are uniform in the union of
/// the simplices, which are assumed to have disjoint interiors, restricted
/// to a thin slab around the slice.
pub fn illumination_fraction(
    family: &IlluminationFamily,
    phi: &[BigRational],
    c: f64,
    cfg: &ShadowConfig,
) -> Result<McReport, AnalysisError> {
    check_slice(c)?;
    if family.simplices.is_empty() {
        return Err(AnalysisError::Domain("empty family".into()));
    }
    let d = family.d();
    let vertex_c: Vec<Vec<f64>> =
        family.simplices.iter().map(|s| s.iter().map(|v| slice_value(&v.iter().map(rat_to_f64).collect::<Vec<_>>())).collect()).collect();
    let half = cfg.slab / 2.0;
    let volumes: Vec<f64> = family
        .simplices
        .iter()
        .zip(&vertex_c)
        .map(|(s, vc)| {
            let lo = vc.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo > c + half || hi < c - half {
                0.0
            } else {
                rat_to_f64(&crate::geometry::vertex_simplex_fraction(s))
            }
        })
        .collect();
    let total: f64 = volumes.iter().sum();
    if !(total > 0.0) {
        return Err(AnalysisError::Domain("slice misses the family".into()));
    }
    let mut rng = substream(cfg.seed, 0);
    let (mut hits, mut taken, mut draws) = (0usize, 0usize, 0usize);
    while taken < cfg.samples && draws < cfg.patience * cfg.samples.max(1) {
        draws += 1;
        let mut pick = rng.gen::<f64>() * total;
        let j = volumes.iter().position(|&v| {
            pick -= v;
            pick < 0.0
        });
        let j = j.unwrap_or(volumes.len() - 1);
        let w = sample_simplex(&mut rng, d);
        let cy: f64 = w.iter().zip(&vertex_c[j]).map(|(a, b)| a * b).sum();
        if (cy - c).abs() > half {
            continue;
        }
        // exact weights summing to one, so that the point lies in the hull
        let mut wq: Vec<BigRational> = w[..d - 1].iter().map(|x| BigRational::from_float(*x).expect("finite")).collect();
        let rest = BigRational::one() - wq.iter().sum::<BigRational>();
        if rest.is_negative() {
            continue;
        }
        wq.push(rest);
        let mut y = vec![BigRational::zero(); d];
        for (wi, v) in wq.iter().zip(&family.simplices[j]) {
            for (yk, vk) in y.iter_mut().zip(v) {
                *yk += wi * vk;
            }
        }
        taken += 1;
        if illuminated(&y, family, phi).map_err(|e| AnalysisError::Domain(e.to_string()))? {
            hits += 1;
        }
    }
    Ok(McReport::proportion(hits, taken, cfg.seed, Claim::UpperBound, 1.0))
}

fn stage(run: &ConstructionRun, k: usize) -> Result<&crate::construction::StageTrace, AnalysisError> {
    run.stages.get(k.wrapping_sub(1)).ok_or_else(|| AnalysisError::Domain(format!("run has no stage {k}")))
}

/// Cumulative matrix just before the phase at `index` of stage `k`.
fn before(run: &ConstructionRun, k: usize, index: usize) -> IntMatrix {
    let s = &run.stages[k - 1];
    match index {
        0 if k == 1 => IntMatrix::identity(run.d()),
        0 => run.stages[k - 2].cumulative.clone(),
        i => s.checkpoints[i - 1].clone(),
    }
}

/// `illumination_fraction` for the freedom simplices `M A Delta` of stage
/// `k`: the run's own `A_k` and fresh draws from the same window, with `M`
/// the matrix before `A_k`. The first stage has no freedom on the left and
/// uses the simplex before `A'_1` alone. `phi` is the direction `u` of the
/// run's plane family.
pub fn illumination_proportion(
    run: &ConstructionRun,
    k: usize,
    c: f64,
    phi: &[BigRational],
    cfg: &ShadowConfig,
) -> Result<McReport, AnalysisError> {
    let s = stage(run, k)?;
    let matrices = match s.phases.iter().position(|p| p.phase == Phase::FreedomLhs) {
        None => vec![before(run, k, 0)],
        Some(i) => {
            let m = before(run, k, i);
            let mut out = vec![s.checkpoints[i].clone()];
            let ctx = PhaseContext::new(run.d()).map_err(crate::construction::ConstructionError::from)?;
            let window = run.schedule.windows(k).map_err(crate::construction::ConstructionError::from)?;
            let window = window.a.expect("stage has a freedom phase");
            let mut rng = substream(cfg.seed, 1);
            for _ in 0..cfg.alternatives {
                let a = gen_freedom_lhs(&ctx, &window, &run.config.generator, &mut rng)
                    .map_err(crate::construction::ConstructionError::from)?;
                let next = m.mul(a.matrix.as_matrix());
                if !out.contains(&next) {
                    out.push(next);
                }
            }
            out
        }
    };
    illumination_fraction(&IlluminationFamily::from_matrices(&matrices), phi, c, cfg)
}

/// Whether left restriction moves applied to `x` at `pi_L` come back to
/// `pi_L` with the path's norm inside `[lo, hi]`, using only allowed moves.
/// Runs of a self-loop are taken at once.
fn restriction_survives(class: &FastClass, d: usize, x: &[f64], lo: f64, hi: f64, budget: usize) -> bool {
    let mut len = x.to_vec();
    let mut cols = vec![1.0f64; d];
    let mut v = class.start;
    for _ in 0..budget {
        let (a, b) = class.contest[v];
        let (w, l, k) = if len[a] > len[b] { (a, b, 0) } else { (b, a, 1) };
        if !is_lhs_restriction_move(d, (w + 1) as Symbol, (l + 1) as Symbol) {
            return false;
        }
        let target = class.next[v][k];
        let reps = if target == v { ((len[w] / len[l]).ceil() - 1.0).max(1.0) } else { 1.0 };
        if target == class.start {
            let others = cols.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, &x)| x).fold(0.0, f64::max);
            let first = if others >= lo { 1.0 } else { ((lo - cols[l]) / cols[w]).ceil().max(1.0) };
            if first <= reps && others.max(cols[l] + first * cols[w]) <= hi {
                return true;
            }
        }
        len[w] -= reps * len[l];
        cols[l] += reps * cols[w];
        if len[w] <= 0.0 || cols[l] > hi {
            return false;
        }
        v = target;
    }
    false
}

/// Fraction of the restriction neighborhood `N(M) ∩ Delta_c` covered by the
/// simplices `M A' Delta` of admissible left restriction paths `A'` in the
/// window of stage `k`, where `M` is the matrix before `A'_k`.
///
/// `N(M)` is spanned by the last two vertices of `M Delta` and the points of
/// the face of the first `d-2` vertices whose weight on the first vertex is
/// at most `t_k`; that weight is proportional to the distance from the span
/// of vertices `2..d-2`. Points are drawn to first order in `t_k`.
pub fn survival_proportion(run: &ConstructionRun, k: usize, c: f64, cfg: &ShadowConfig) -> Result<McReport, AnalysisError> {
    check_slice(c)?;
    let d = run.d();
    if d < 4 {
        return Err(AnalysisError::Domain("restriction needs d >= 4".into()));
    }
    let s = stage(run, k)?;
    let i = s.phases.iter().position(|p| p.phase == Phase::RestrictionLhs).expect("every stage restricts");
    let m = before(run, k, i);
    let windows = run.schedule.windows(k).map_err(crate::construction::ConstructionError::from)?;
    let t = 1.0 / big_to_f64(&windows.t_inverse);
    let tau = t / (1.0 - t);
    let (lo, hi) = (big_to_f64(&windows.a_prime.lo), big_to_f64(&windows.a_prime.hi));
    let sums: Vec<f64> = m.column_sums().iter().map(big_to_f64).collect();
    let vertex_c: Vec<f64> = (0..d)
        .map(|j| (m.get(d - 2, j) + m.get(d - 1, j)).to_f64().unwrap_or(f64::MAX) / sums[j])
        .collect();
    let class = FastClass::new(&PhaseContext::new(d).map_err(crate::construction::ConstructionError::from)?.left)?;
    let exp = |rng: &mut rand_chacha::ChaCha8Rng| -(1.0 - rng.gen::<f64>()).ln();
    let mut rng = substream(cfg.seed, 2);
    let (mut hits, mut taken, mut draws) = (0usize, 0usize, 0usize);
    while taken < cfg.samples && draws < cfg.patience * cfg.samples.max(1) {
        draws += 1;
        // weights on vertices 2..d with density proportional to the mass on
        // vertices 2..d-2, then a first weight uniform below tau times it
        let heavy = rng.gen_range(1..d - 2);
        let mut w = vec![0.0; d];
        for (j, wj) in w.iter_mut().enumerate().skip(1) {
            // a Gamma(2) weight is the sum of two exponential ones
            *wj = exp(&mut rng) + if j == heavy { exp(&mut rng) } else { 0.0 };
        }
        let norm: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= norm);
        let mass: f64 = w[1..d - 2].iter().sum();
        w[0] = tau * mass * rng.gen::<f64>();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let cy: f64 = w.iter().zip(&vertex_c).map(|(a, b)| a * b).sum();
        if (cy - c).abs() > cfg.slab / 2.0 {
            continue;
        }
        taken += 1;
        let x: Vec<f64> = w.iter().zip(&sums).map(|(wi, s)| wi / s).collect();
        if restriction_survives(&class, d, &x, lo, hi, 10_000) {
            hits += 1;
        }
    }
    Ok(McReport::proportion(hits, taken, cfg.seed, Claim::UpperBound, 1.0))
}
