//! Stage-by-stage assembly of a construction run.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::phases::{
    column_ratio, connector_path, gen_freedom_lhs, gen_freedom_rhs, gen_restriction_lhs, gen_restriction_rhs,
    gen_transition, validate, GeneratorConfig, Phase, PhaseContext, PhaseError, PhasePath,
};
use super::schedule::{Schedule, ScheduleError, StageExponents};
use crate::induction::{Iet, IetRecord};
use crate::matrix::{big_ratio_f64, decimal, decimal_option, IntMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub d: usize,
    /// Balance constant of Conditions * (1) and (3).
    pub zeta: f64,
    pub generator: GeneratorConfig,
    /// Angle below which the limit vertices count as converged.
    pub limit_tol: f64,
}

impl ConstructionConfig {
    pub fn new(d: usize) -> Self {
        Self { d, zeta: 4.0, generator: GeneratorConfig::default(), limit_tol: 1e-9 }
    }
}

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("stage {k}, {phase}: {source}")]
    Stage {
        k: usize,
        phase: Phase,
        source: PhaseError,
        partial: Box<Vec<StageTrace>>,
    },
    #[error(transparent)]
    Setup(#[from] PhaseError),
}

/// Angle between two non-negative integer vectors, from the exact Gram
/// determinant so that tiny angles keep their relative precision.
pub fn exact_angle(a: &[BigInt], b: &[BigInt]) -> f64 {
    let dot = |x: &[BigInt], y: &[BigInt]| -> BigInt { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    let (aa, bb, ab) = (dot(a, a), dot(b, b), dot(a, b));
    let denom = &aa * &bb;
    if denom.is_zero() {
        return 0.0;
    }
    let num = &denom - &ab * &ab;
    if num <= BigInt::zero() {
        return 0.0;
    }
    big_ratio_f64(&num, &denom).min(1.0).sqrt().asin()
}

/// Angle between `v` and the coordinate subspace on the 0-based indices in
/// `coords`.
pub fn span_angle(v: &[BigInt], coords: std::ops::Range<usize>) -> f64 {
    let mut inside = BigInt::zero();
    let mut outside = BigInt::zero();
    for (i, x) in v.iter().enumerate() {
        if coords.contains(&i) {
            inside += x * x;
        } else {
            outside += x * x;
        }
    }
    let total = &inside + &outside;
    if total.is_zero() || outside.is_zero() {
        return 0.0;
    }
    big_ratio_f64(&outside, &total).min(1.0).sqrt().asin()
}

/// Column angles of a cumulative matrix against the two coordinate blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAngles {
    /// Largest angle from `C_i`, `i <= d-2`, to `span(e_1..e_{d-2})`.
    pub first_to_span: f64,
    /// Largest angle from `C_{d-1}`, `C_d` to `span(e_{d-1}, e_d)`.
    pub last_to_span: f64,
    /// Largest angle between two of the first `d-2` columns.
    pub first_spread: f64,
    /// Angle between the last two columns.
    pub last_spread: f64,
    /// Smallest angle between a first-block and a last-block column.
    pub inter: f64,
}

impl ClusterAngles {
    pub fn of(m: &IntMatrix) -> Self {
        let d = m.cols();
        let cols: Vec<Vec<BigInt>> = (0..d).map(|j| m.column(j)).collect();
        let first = 0..d - 2;
        let last = d - 2..d;
        let mut out = Self { first_to_span: 0.0, last_to_span: 0.0, first_spread: 0.0, last_spread: 0.0, inter: f64::MAX };
        for i in first.clone() {
            out.first_to_span = out.first_to_span.max(span_angle(&cols[i], first.clone()));
            for j in i + 1..d - 2 {
                out.first_spread = out.first_spread.max(exact_angle(&cols[i], &cols[j]));
            }
            for j in last.clone() {
                out.inter = out.inter.min(exact_angle(&cols[i], &cols[j]));
            }
        }
        for j in last.clone() {
            out.last_to_span = out.last_to_span.max(span_angle(&cols[j], last.clone()));
        }
        out.last_spread = exact_angle(&cols[d - 2], &cols[d - 1]);
        out
    }
}

/// Column sizes and ratios measured during one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    /// Largest of the first `d-2` columns after left freedom.
    #[serde(with = "decimal_option")]
    pub big_u: Option<BigInt>,
    /// Smallest of the first `d-2` columns after left restriction.
    #[serde(with = "decimal")]
    pub small_u: BigInt,
    /// Smallest of the first `d-2` columns after the transition.
    #[serde(with = "decimal")]
    pub after_transition_min: BigInt,
    /// Largest of the last two columns after right freedom.
    #[serde(with = "decimal")]
    pub big_v: BigInt,
    /// Ratio of the last two columns of the running product after right freedom.
    pub big_v_ratio: f64,
    /// Smallest of the last two columns after right restriction.
    #[serde(with = "decimal")]
    pub small_v: BigInt,
    /// First-block ratio of `A_k`.
    pub ratio_a: Option<f64>,
    /// First-block ratio of `A'_k T_k`.
    pub ratio_a_prime_t: f64,
    /// Last-block ratio of `B_k`.
    pub ratio_b: f64,
    /// Last-block ratio of `B'_k`.
    pub ratio_b_prime: f64,
    /// Angles of the running product at the end of the stage.
    pub angles: ClusterAngles,
    /// Angles right after left freedom.
    pub angles_after_freedom: Option<ClusterAngles>,
    /// Angles right after right restriction.
    pub angles_after_restriction: ClusterAngles,
    /// Normalized sums of the two column blocks at the end of the stage.
    pub first_vertex: Vec<f64>,
    pub last_vertex: Vec<f64>,
}

/// One stage: its phases, the running product after each of them, and the
/// measurements taken along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub k: usize,
    pub exponents: StageExponents,
    pub phases: Vec<PhasePath>,
    /// Running product after each phase, aligned with `phases`.
    pub checkpoints: Vec<IntMatrix>,
    /// Running product at the end of the stage.
    pub cumulative: IntMatrix,
    pub stats: StageStats,
}

fn block_min(m: &IntMatrix, cols: std::ops::Range<usize>) -> BigInt {
    cols.map(|j| m.column_sum(j)).min().expect("non-empty")
}

fn block_max(m: &IntMatrix, cols: std::ops::Range<usize>) -> BigInt {
    cols.map(|j| m.column_sum(j)).max().expect("non-empty")
}

fn block_vertex(m: &IntMatrix, cols: std::ops::Range<usize>) -> Vec<f64> {
    let d = m.rows();
    let sums: Vec<BigInt> = (0..d).map(|i| cols.clone().map(|j| m.get(i, j).clone()).sum()).collect();
    let total: BigInt = sums.iter().sum();
    sums.iter().map(|x| big_ratio_f64(x, &total)).collect()
}

impl StageTrace {
    /// The named (non-connector) phase of this stage.
    pub fn phase(&self, p: Phase) -> Option<&PhasePath> {
        self.phases.iter().find(|x| x.phase == p)
    }

    /// Running product right after the named phase.
    pub fn checkpoint(&self, p: Phase) -> Option<&IntMatrix> {
        self.phases.iter().position(|x| x.phase == p).map(|i| &self.checkpoints[i])
    }

    /// Product of all phase matrices of the stage.
    pub fn stage_matrix(&self) -> IntMatrix {
        let d = self.cumulative.cols();
        self.phases.iter().fold(IntMatrix::identity(d), |acc, p| acc.mul(p.matrix.as_matrix()))
    }

    /// Assembles a stage from its phases, starting from the running product
    /// `start`, and takes all measurements.
    pub fn assemble(k: usize, exponents: StageExponents, start: &IntMatrix, phases: Vec<PhasePath>) -> Self {
        let d = start.cols();
        let mut checkpoints = Vec::with_capacity(phases.len());
        let mut m = start.clone();
        for p in &phases {
            m = m.mul(p.matrix.as_matrix());
            checkpoints.push(m.clone());
        }
        let first = 0..d - 2;
        let last = d - 2..d;
        let at = |p: Phase| phases.iter().position(|x| x.phase == p).map(|i| &checkpoints[i]);
        let matrix_of = |p: Phase| phases.iter().find(|x| x.phase == p).map(|x| x.matrix.as_matrix().clone());
        let identity = IntMatrix::identity(d);
        let after_a = at(Phase::FreedomLhs);
        let after_ap = at(Phase::RestrictionLhs).unwrap_or(start);
        let after_t = at(Phase::Transition).unwrap_or(after_ap);
        let after_b = at(Phase::FreedomRhs).unwrap_or(after_t);
        let after_bp = at(Phase::RestrictionRhs).unwrap_or(after_b);
        let ap_t = matrix_of(Phase::RestrictionLhs)
            .unwrap_or_else(|| identity.clone())
            .mul(&matrix_of(Phase::Transition).unwrap_or_else(|| identity.clone()));
        let stats = StageStats {
            big_u: after_a.map(|m| block_max(m, first.clone())),
            small_u: block_min(after_ap, first.clone()),
            after_transition_min: block_min(after_t, first.clone()),
            big_v: block_max(after_b, last.clone()),
            big_v_ratio: column_ratio(after_b, last.clone()),
            small_v: block_min(after_bp, last.clone()),
            ratio_a: matrix_of(Phase::FreedomLhs).map(|a| column_ratio(&a, first.clone())),
            ratio_a_prime_t: column_ratio(&ap_t, first.clone()),
            ratio_b: column_ratio(&matrix_of(Phase::FreedomRhs).unwrap_or_else(|| identity.clone()), last.clone()),
            ratio_b_prime: column_ratio(&matrix_of(Phase::RestrictionRhs).unwrap_or(identity), last.clone()),
            angles: ClusterAngles::of(&m),
            angles_after_freedom: after_a.map(ClusterAngles::of),
            angles_after_restriction: ClusterAngles::of(after_bp),
            first_vertex: block_vertex(&m, first),
            last_vertex: block_vertex(&m, last),
        };
        Self { k, exponents, phases, checkpoints, cumulative: m, stats }
    }
}

/// The two clusters of vertex directions after the last stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCell {
    pub first_vertex: Vec<f64>,
    pub last_vertex: Vec<f64>,
    pub first_spread: f64,
    pub last_spread: f64,
    pub inter: f64,
    /// Largest angle each cluster vertex moved in each stage after the first.
    pub movement: Vec<f64>,
    pub converged: bool,
    /// Lengths `M 1` with the starting permutation.
    pub representative: IetRecord,
    /// Lengths given by the sums of the first and of the last columns.
    pub extremes: [IetRecord; 2],
}

fn unit_angle(a: &[f64], b: &[f64]) -> f64 {
    crate::symplectic::angle(a, b)
}

impl LimitCell {
    fn from_stages(stages: &[StageTrace], start: &crate::perm::LabeledPermutation, tol: f64) -> Self {
        let last = stages.last().expect("at least one stage");
        let m = &last.cumulative;
        let d = m.cols();
        let movement: Vec<f64> = stages
            .windows(2)
            .map(|w| {
                unit_angle(&w[0].stats.first_vertex, &w[1].stats.first_vertex)
                    .max(unit_angle(&w[0].stats.last_vertex, &w[1].stats.last_vertex))
            })
            .collect();
        let converged = movement.last().is_some_and(|&x| x < tol);
        let lengths = |cols: std::ops::Range<usize>| -> Vec<BigInt> {
            (0..d).map(|i| cols.clone().map(|j| m.get(i, j).clone()).sum()).collect()
        };
        let record = |l: Vec<BigInt>| Iet::from_integers(&l, start.clone()).expect("positive lengths").to_record();
        Self {
            first_vertex: last.stats.first_vertex.clone(),
            last_vertex: last.stats.last_vertex.clone(),
            first_spread: last.stats.angles.first_spread,
            last_spread: last.stats.angles.last_spread,
            inter: last.stats.angles.inter,
            movement,
            converged,
            representative: record(lengths(0..d)),
            extremes: [record(lengths(0..d - 2)), record(lengths(d - 2..d))],
        }
    }

    /// Intra-cluster spread is at least ten times smaller than the
    /// separation of the clusters.
    pub fn clusters_separated(&self) -> bool {
        10.0 * self.first_spread.max(self.last_spread) < self.inter
    }
}

/// A complete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRun {
    pub seed: u64,
    pub schedule: Schedule,
    pub config: ConstructionConfig,
    pub stages: Vec<StageTrace>,
    pub limit: LimitCell,
}

impl ConstructionRun {
    pub fn d(&self) -> usize {
        self.config.d
    }

    /// Running product after the last stage.
    pub fn matrix(&self) -> &IntMatrix {
        &self.stages.last().expect("non-empty run").cumulative
    }

    /// The permutation every path starts from.
    pub fn start_permutation(&self) -> crate::perm::LabeledPermutation {
        self.stages[0].phases[0].start.clone()
    }

    /// Replays every phase, checks its grammar, and recomputes every running
    /// product from scratch.
    pub fn verify(&self) -> Result<(), String> {
        let ctx = PhaseContext::new(self.d()).map_err(|e| e.to_string())?;
        let mut m = IntMatrix::identity(self.d());
        for s in &self.stages {
            for (p, c) in s.phases.iter().zip(&s.checkpoints) {
                validate(&ctx, p).map_err(|e| format!("stage {}: {e}", s.k))?;
                m = m.mul(p.matrix.as_matrix());
                if m != *c {
                    return Err(format!("stage {}: running product differs after {}", s.k, p.phase));
                }
            }
            if m != s.cumulative {
                return Err(format!("stage {}: cumulative product differs", s.k));
            }
        }
        Ok(())
    }
}

/// Runs every stage of `schedule`. The random choices of all generators come
/// from one ChaCha stream seeded with `seed`.
pub fn run_construction(
    schedule: &Schedule,
    config: &ConstructionConfig,
    seed: u64,
) -> Result<ConstructionRun, ConstructionError> {
    let ctx = PhaseContext::new(config.d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stages: Vec<StageTrace> = Vec::with_capacity(schedule.len());
    let mut m = IntMatrix::identity(config.d);
    for k in 1..=schedule.len() {
        let stage = generate_stage(&ctx, schedule, config, k, &m, &mut rng).map_err(|e| match e {
            ConstructionError::Stage { k, phase, source, .. } => {
                ConstructionError::Stage { k, phase, source, partial: Box::new(stages.clone()) }
            }
            other => other,
        })?;
        m = stage.cumulative.clone();
        log::info!("stage {k}: norm 10^{:.2}", crate::matrix::big_log10(&m.norm()));
        stages.push(stage);
    }
    let limit = LimitCell::from_stages(&stages, &ctx.left, config.limit_tol);
    Ok(ConstructionRun { seed, schedule: schedule.clone(), config: config.clone(), stages, limit })
}

/// Draws the paths of stage `k` and appends them to the cumulative matrix
/// `start` of the earlier stages. Stage errors carry no partial trace.
pub fn generate_stage<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    schedule: &Schedule,
    config: &ConstructionConfig,
    k: usize,
    start: &IntMatrix,
    rng: &mut R,
) -> Result<StageTrace, ConstructionError> {
    let gen = &config.generator;
    let d = config.d;
    let w = schedule.windows(k)?;
    let fail = |phase: Phase, source: PhaseError| ConstructionError::Stage { k, phase, source, partial: Box::default() };
    let mut phases = Vec::new();
    if let Some(aw) = &w.a {
        phases.push(connector_path(ctx).map_err(|e| fail(Phase::Connector, e))?);
        let mut best: Option<(f64, PhasePath)> = None;
        for _ in 0..gen.balance_attempts.max(1) {
            let a = gen_freedom_lhs(ctx, aw, gen, rng).map_err(|e| fail(Phase::FreedomLhs, e))?;
            let ratio = column_ratio(a.matrix.as_matrix(), 0..d - 2);
            if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
                best = Some((ratio, a));
            }
            if ratio <= config.zeta {
                break;
            }
        }
        phases.push(best.expect("at least one attempt").1);
        phases.push(connector_path(ctx).map_err(|e| fail(Phase::Connector, e))?);
    }
    phases.push(gen_restriction_lhs(ctx, &w.a_prime, gen, rng).map_err(|e| fail(Phase::RestrictionLhs, e))?);
    phases.push(gen_transition(ctx, &w.t_max, gen, rng).map_err(|e| fail(Phase::Transition, e))?);
    phases.push(gen_freedom_rhs(ctx, &w.b, gen, rng).map_err(|e| fail(Phase::FreedomRhs, e))?);
    phases.push(gen_restriction_rhs(ctx, &w.b_prime, rng).map_err(|e| fail(Phase::RestrictionRhs, e))?);
    for p in &phases {
        validate(ctx, p).map_err(|e| fail(p.phase, e))?;
    }
    Ok(StageTrace::assemble(k, schedule.exponents(k)?.clone(), start, phases))
}

pub fn nested(outer: &IntMatrix, inner: &IntMatrix) -> bool {
    match outer.to_rational().inverse() {
        Some(inv) => {
            let t = inv.mul(&inner.to_rational());
            (0..t.rows()).all(|i| (0..t.cols()).all(|j| !t.get(i, j).is_negative()))
        }
        None => false,
    }
}
