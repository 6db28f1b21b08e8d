//! Conditions on a finished run: column balance, angle contraction, and the
//! recursions tying the column sizes of consecutive stages.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::phases::{column_ratio, Phase};
use super::run::{ClusterAngles, StageTrace};
use crate::matrix::{big_log10, IntMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub k: usize,
    /// `None` for the first stage, which has no left freedom.
    pub ratio_a: Option<f64>,
    pub a_balanced: bool,
    pub ratio_a_prime_t: f64,
    /// `log10` of the bound on `ratio_a_prime_t`.
    pub a_prime_t_bound_exp: f64,
    pub a_prime_t_ok: bool,
    pub ratio_b: f64,
    pub b_balanced: bool,
    pub ratio_b_prime: f64,
    pub b_prime_ok: bool,
}

impl StarReport {
    pub fn passed(&self) -> bool {
        self.a_balanced && self.a_prime_t_ok && self.b_balanced && self.b_prime_ok
    }
}

/// The four balance conditions, stage by stage. Ratios equal to `zeta` pass,
/// so a trivial stage passes for any `zeta >= 1`.
pub fn check_conditions_star(trace: &[StageTrace], zeta: f64) -> Vec<StarReport> {
    trace
        .iter()
        .map(|s| {
            let st = &s.stats;
            let bound = 2.0 * s.exponents.slack;
            StarReport {
                k: s.k,
                ratio_a: st.ratio_a,
                a_balanced: st.ratio_a.is_none_or(|r| r <= zeta),
                ratio_a_prime_t: st.ratio_a_prime_t,
                a_prime_t_bound_exp: bound,
                a_prime_t_ok: st.ratio_a_prime_t.log10() < bound,
                ratio_b: st.ratio_b,
                b_balanced: st.ratio_b <= zeta,
                ratio_b_prime: st.ratio_b_prime,
                b_prime_ok: st.ratio_b_prime <= 2.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleStarReport {
    pub k: usize,
    /// Largest angle between first-block columns after left freedom.
    pub first_spread: Option<f64>,
    pub first_threshold: f64,
    pub first_ok: bool,
    /// Angle between the last two columns after right restriction.
    pub last_spread: f64,
    pub last_threshold: f64,
    pub last_ok: bool,
}

/// Angle thresholds `10^{-c P(2k)}` after `A_k` and `10^{-P(2k+1)}` after
/// `B'_k`. The first stage has no `A_k` and passes the first test vacuously.
pub fn check_condition_double_star(trace: &[StageTrace], c: f64) -> Vec<DoubleStarReport> {
    trace
        .iter()
        .map(|s| {
            let e = &s.exponents;
            let first_threshold = 10f64.powf(-c * e.p_even);
            let last_threshold = 10f64.powf(-e.p_odd);
            let first_spread = s.stats.angles_after_freedom.as_ref().map(|a| a.first_spread);
            let last_spread = s.stats.angles_after_restriction.last_spread;
            DoubleStarReport {
                k: s.k,
                first_spread,
                first_threshold,
                first_ok: first_spread.is_none_or(|a| a < first_threshold),
                last_spread,
                last_threshold,
                last_ok: last_spread < last_threshold,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub k: usize,
    /// `log10 U_k`.
    pub u: f64,
    /// `log10` of the measured upper bound on `U_k`.
    pub upper: f64,
    /// `log10` of the measured lower bound on `U_k`.
    pub lower: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// `log10 (V_{k-1} / U_{k-1})`, to compare with `p_odd` of stage `k-1`.
    pub v_over_u: f64,
    pub sandwich_target: f64,
}

impl SizeReport {
    pub fn passed(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

fn max_first(m: &IntMatrix) -> BigInt {
    let d = m.cols();
    (0..d - 2).map(|j| m.column_sum(j)).max().expect("d >= 3")
}

fn max_norm(m: &IntMatrix, cols: std::ops::Range<usize>) -> BigInt {
    cols.map(|j| m.column_sum(j)).max().expect("non-empty")
}

/// Checks, for every stage `k >= 2`,
///
/// `U_k <= (U_{k-1} |A'_{k-1}| |T_{k-1}| + V_{k-1}) |A_k|_1` and
/// `U_k >= (m_{k-1} + V_{k-1} / r_{k-1}) |A_k|_1`,
///
/// where `|.|_1` is the largest first-block column of `A_k`, `m` the smallest
/// first-block column after the transition and `r` the last-two ratio of the
/// running product after right freedom. A single stage passes vacuously.
pub fn check_size_recursions(trace: &[StageTrace]) -> Vec<SizeReport> {
    let mut out = Vec::new();
    for w in trace.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let (Some(a), Some(u)) = (cur.phase(Phase::FreedomLhs), cur.stats.big_u.as_ref()) else { continue };
        let d = cur.cumulative.cols();
        let a_first = max_first(a.matrix.as_matrix());
        let u_prev = prev.stats.big_u.clone().unwrap_or_else(|| BigInt::from(1));
        let norm_of = |p: Phase| prev.phase(p).map_or(BigInt::from(1), |x| max_norm(x.matrix.as_matrix(), 0..d));
        let v_prev = &prev.stats.big_v;
        let upper = (&u_prev * norm_of(Phase::RestrictionLhs) * norm_of(Phase::Transition) + v_prev) * &a_first;
        let lower_log = {
            let m = crate::matrix::big_to_f64(&prev.stats.after_transition_min);
            let v = crate::matrix::big_to_f64(v_prev) / prev.stats.big_v_ratio;
            (m + v).log10() + big_log10(&a_first)
        };
        let u_log = big_log10(u);
        out.push(SizeReport {
            k: cur.k,
            u: u_log,
            upper: big_log10(&upper),
            lower: lower_log,
            upper_ok: *u <= upper,
            // the lower bound is evaluated in floating point
            lower_ok: u_log >= lower_log - 1e-9,
            v_over_u: big_log10(v_prev) - big_log10(&u_prev),
            sandwich_target: prev.exponents.p_odd,
        });
    }
    out
}

/// Angle series along the checkpoints where each block can only be combined
/// with itself: the first block across the left-hand phases of a stage
/// (starting from the previous stage's end) and the last block across the
/// transition's end and the right-hand phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    /// Largest first-block angle to `span(e_1..e_{d-2})`, per stage.
    pub first_lhs: Vec<Vec<f64>>,
    /// Largest last-block angle to `span(e_{d-1}, e_d)`, per stage.
    pub last_rhs: Vec<Vec<f64>>,
    /// Same two quantities measured in the `l1` sense: the fraction of the
    /// column mass outside the span.
    pub first_lhs_mass: Vec<Vec<f64>>,
    pub last_rhs_mass: Vec<Vec<f64>>,
    /// Stage-end values, reported only.
    pub first_end: Vec<f64>,
    pub last_end: Vec<f64>,
    pub first_ok: bool,
    pub last_ok: bool,
}

/// Largest `sin^2` of the angle from a column in `cols` to the coordinate
/// span of `cols`, exactly.
fn max_sin2(m: &IntMatrix, cols: std::ops::Range<usize>) -> BigRational {
    cols.clone()
        .map(|j| {
            let (mut inside, mut outside) = (BigInt::zero(), BigInt::zero());
            for i in 0..m.rows() {
                let x = m.get(i, j);
                if cols.contains(&i) {
                    inside += x * x;
                } else {
                    outside += x * x;
                }
            }
            BigRational::new(outside.clone(), inside + outside)
        })
        .max()
        .expect("non-empty")
}

fn non_increasing(xs: &[BigRational]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

fn outside_mass(m: &IntMatrix, cols: std::ops::Range<usize>) -> f64 {
    cols.clone()
        .map(|j| {
            let out: BigInt = (0..m.rows()).filter(|i| !cols.contains(i)).map(|i| m.get(i, j).clone()).sum();
            crate::matrix::big_ratio_f64(&out, &m.column_sum(j))
        })
        .fold(0.0, f64::max)
}

/// The verdicts compare `sin^2` of the angles as exact rationals.
pub fn check_angle_monotonicity(trace: &[StageTrace]) -> MonotoneReport {
    let Some(first) = trace.first() else {
        return MonotoneReport {
            first_lhs: vec![],
            last_rhs: vec![],
            first_lhs_mass: vec![],
            last_rhs_mass: vec![],
            first_end: vec![],
            last_end: vec![],
            first_ok: true,
            last_ok: true,
        };
    };
    let d = first.cumulative.cols();
    let lhs = [Phase::Connector, Phase::FreedomLhs, Phase::RestrictionLhs];
    let rhs = [Phase::FreedomRhs, Phase::RestrictionRhs];
    let mut prev_end = IntMatrix::identity(d);
    let (mut first_lhs, mut last_rhs, mut first_lhs_mass, mut last_rhs_mass) = (vec![], vec![], vec![], vec![]);
    let (mut first_ok, mut last_ok) = (true, true);
    for s in trace {
        let mut f = vec![prev_end.clone()];
        let mut l = vec![];
        for (p, c) in s.phases.iter().zip(&s.checkpoints) {
            if lhs.contains(&p.phase) {
                f.push(c.clone());
            } else if p.phase == Phase::Transition || rhs.contains(&p.phase) {
                l.push(c.clone());
            }
        }
        first_lhs.push(f.iter().map(|m| ClusterAngles::of(m).first_to_span).collect::<Vec<_>>());
        first_lhs_mass.push(f.iter().map(|m| outside_mass(m, 0..d - 2)).collect::<Vec<_>>());
        last_rhs.push(l.iter().map(|m| ClusterAngles::of(m).last_to_span).collect::<Vec<_>>());
        last_rhs_mass.push(l.iter().map(|m| outside_mass(m, d - 2..d)).collect::<Vec<_>>());
        first_ok &= non_increasing(&f.iter().map(|m| max_sin2(m, 0..d - 2)).collect::<Vec<_>>());
        last_ok &= non_increasing(&l.iter().map(|m| max_sin2(m, d - 2..d)).collect::<Vec<_>>());
        prev_end = s.cumulative.clone();
    }
    let first_end: Vec<f64> = trace.iter().map(|s| s.stats.angles.first_to_span).collect();
    let last_end: Vec<f64> = trace.iter().map(|s| s.stats.angles.last_to_span).collect();
    MonotoneReport {
        first_ok,
        last_ok,
        first_lhs,
        last_rhs,
        first_lhs_mass,
        last_rhs_mass,
        first_end,
        last_end,
    }
}

/// Restriction on the left keeps the last two columns of its matrix at
/// `e_{d-1}`, `e_d` and has first row `(1, 0, ..., 0)`; restriction on the
/// right keeps the first `d-2` columns at the identity.
pub fn restriction_columns_invariant(trace: &[StageTrace]) -> bool {
    trace.iter().all(|s| {
        let d = s.cumulative.cols();
        let id = IntMatrix::identity(d);
        let lhs = s.phase(Phase::RestrictionLhs).is_none_or(|p| {
            let m = p.matrix.as_matrix();
            (d - 2..d).all(|j| m.column(j) == id.column(j)) && (1..d).all(|j| m.get(0, j) == id.get(0, j))
        });
        let rhs = s.phase(Phase::RestrictionRhs).is_none_or(|p| {
            let m = p.matrix.as_matrix();
            (0..d - 2).all(|j| m.column(j) == id.column(j))
        });
        lhs && rhs
    })
}

/// `max |C_i| / min |C_i|` over the first `d-2` columns of `m`.
pub fn first_block_ratio(m: &IntMatrix) -> f64 {
    column_ratio(m, 0..m.cols() - 2)
}
