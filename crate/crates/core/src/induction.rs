//! Exact Rauzy-Veech induction and orbits of interval exchanges.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{big_ratio_f64, format_rational, parse_rational, VisitationMatrix};
use crate::perm::{LabeledPermutation, Move, PermError, RauzyEdge, Side, Symbol};

/// Default step budget of `induct_until`.
pub const DEFAULT_STEP_BUDGET: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum InductionError {
    #[error("induction undefined at step {step}: the two last intervals have equal length")]
    Undefined { step: usize, partial: Box<InductionTrace> },
    #[error("step budget of {budget} exhausted before the stopping rule held")]
    Budget { budget: usize, partial: Box<InductionTrace> },
    #[error("point {0} lies outside the domain [0, {1})")]
    Domain(String, String),
    #[error("invalid lengths: {0}")]
    InvalidLengths(String),
    #[error(transparent)]
    Perm(#[from] PermError),
}

impl InductionError {
    /// Step at which induction broke down, for the equality case.
    pub fn undefined_step(&self) -> Option<usize> {
        match self {
            InductionError::Undefined { step, .. } => Some(*step),
            _ => None,
        }
    }
}

/// An interval exchange with exact rational lengths.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Iet {
    lengths: Vec<BigRational>,
    perm: LabeledPermutation,
}

impl Iet {
    pub fn new(lengths: Vec<BigRational>, perm: LabeledPermutation) -> Result<Self, InductionError> {
        if lengths.len() != perm.d() {
            return Err(InductionError::InvalidLengths(format!(
                "{} lengths for an alphabet of size {}",
                lengths.len(),
                perm.d()
            )));
        }
        if let Some(bad) = lengths.iter().find(|x| !x.is_positive()) {
            return Err(InductionError::InvalidLengths(format!("non-positive length {bad}")));
        }
        Ok(Self { lengths, perm })
    }

    pub fn from_integers(lengths: &[BigInt], perm: LabeledPermutation) -> Result<Self, InductionError> {
        Self::new(lengths.iter().map(|x| BigRational::from_integer(x.clone())).collect(), perm)
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    pub fn lengths(&self) -> &[BigRational] {
        &self.lengths
    }

    /// Length of interval `s`.
    pub fn length(&self, s: Symbol) -> &BigRational {
        &self.lengths[s as usize - 1]
    }

    pub fn perm(&self) -> &LabeledPermutation {
        &self.perm
    }

    pub fn total(&self) -> BigRational {
        self.lengths.iter().sum()
    }

    pub fn normalized(&self) -> Iet {
        let t = self.total();
        Iet { lengths: self.lengths.iter().map(|x| x / &t).collect(), perm: self.perm.clone() }
    }

    pub fn lengths_f64(&self) -> Vec<f64> {
        self.lengths.iter().map(crate::matrix::rat_to_f64).collect()
    }

    /// Left endpoints of the top intervals, indexed by symbol.
    fn top_starts(&self) -> Vec<BigRational> {
        starts(&self.lengths, self.perm.top())
    }

    fn bottom_starts(&self) -> Vec<BigRational> {
        starts(&self.lengths, self.perm.bottom())
    }

    /// Image of one point.
    pub fn apply(&self, x: &BigRational) -> Result<BigRational, InductionError> {
        let total = self.total();
        if x.is_negative() || *x >= total {
            return Err(InductionError::Domain(format_rational(x), format_rational(&total)));
        }
        let top = self.top_starts();
        let bottom = self.bottom_starts();
        Ok(apply_with(&self.lengths, self.perm.top(), &top, &bottom, x))
    }

    /// Interior discontinuities, in increasing order.
    pub fn discontinuities(&self) -> Vec<BigRational> {
        let mut acc = BigRational::zero();
        let mut out = Vec::new();
        for &s in &self.perm.top()[..self.d() - 1] {
            acc += self.length(s);
            out.push(acc.clone());
        }
        out
    }

    pub fn to_record(&self) -> IetRecord {
        IetRecord { lengths: self.lengths.iter().map(format_rational).collect(), perm: self.perm.clone() }
    }
}

fn starts(lengths: &[BigRational], order: &[Symbol]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); lengths.len()];
    let mut acc = BigRational::zero();
    for &s in order {
        out[s as usize - 1] = acc.clone();
        acc += &lengths[s as usize - 1];
    }
    out
}

fn apply_with(
    lengths: &[BigRational],
    top_order: &[Symbol],
    top: &[BigRational],
    bottom: &[BigRational],
    x: &BigRational,
) -> BigRational {
    for &s in top_order {
        let i = s as usize - 1;
        if *x < &top[i] + &lengths[i] {
            return x - &top[i] + &bottom[i];
        }
    }
    unreachable!("point inside the domain")
}

/// Serialized form with rationals as `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IetRecord {
    pub lengths: Vec<String>,
    pub perm: LabeledPermutation,
}

impl IetRecord {
    pub fn to_iet(&self) -> Result<Iet, InductionError> {
        let lengths: Result<Vec<_>, _> = self.lengths.iter().map(|s| parse_rational(s)).collect();
        Iet::new(lengths.map_err(InductionError::InvalidLengths)?, self.perm.clone())
    }
}

/// Output of a single induction step.
#[derive(Clone, Debug)]
pub struct Step {
    pub induced: Iet,
    pub edge: RauzyEdge,
    pub matrix: VisitationMatrix,
}

fn contest(t: &Iet) -> Option<Side> {
    let a = t.length(t.perm.last_top());
    let b = t.length(t.perm.last_bottom());
    match a.cmp(b) {
        std::cmp::Ordering::Greater => Some(Side::TopWins),
        std::cmp::Ordering::Less => Some(Side::BottomWins),
        std::cmp::Ordering::Equal => None,
    }
}

/// One unnormalized Rauzy-Veech step; `x = E x'` holds exactly.
pub fn step(t: &Iet) -> Result<Step, InductionError> {
    let (induced, mv) = raw_step(t).ok_or_else(|| InductionError::Undefined {
        step: 0,
        partial: Box::new(InductionTrace::empty(t)),
    })?;
    let edge = crate::perm::rauzy_move(&t.perm, mv.side)?;
    Ok(Step { induced, edge, matrix: VisitationMatrix::elementary(t.d(), mv.winner, mv.loser) })
}

fn raw_step(t: &Iet) -> Option<(Iet, Move)> {
    let side = contest(t)?;
    let (winner, loser) = t.perm.contest(side);
    let mut lengths = t.lengths.clone();
    let l = lengths[loser as usize - 1].clone();
    lengths[winner as usize - 1] -= l;
    Some((Iet { lengths, perm: t.perm.moved(side) }, Move { winner, loser, side }))
}

/// One step followed by rescaling to total length one.
pub fn normalized_step(t: &Iet) -> Result<Iet, InductionError> {
    Ok(step(t)?.induced.normalized())
}

/// Record of `n` induction steps.
#[derive(Clone, Debug)]
pub struct InductionTrace {
    pub start: Iet,
    pub moves: Vec<Move>,
    /// `M(n)` for each requested checkpoint `n`.
    pub checkpoints: Vec<(usize, VisitationMatrix)>,
    pub matrix: VisitationMatrix,
    pub induced: Iet,
}

impl InductionTrace {
    fn empty(t: &Iet) -> Self {
        Self {
            start: t.clone(),
            moves: Vec::new(),
            checkpoints: Vec::new(),
            matrix: VisitationMatrix::identity(t.d()),
            induced: t.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Full edges, replayed from the starting permutation.
    pub fn edges(&self) -> Vec<RauzyEdge> {
        expand_moves(self.start.perm(), &self.moves)
    }

    pub fn to_record(&self) -> TraceRecord {
        TraceRecord {
            start: self.start.to_record(),
            steps: self.moves.len(),
            moves: self.moves.clone(),
            checkpoints: self.checkpoints.iter().map(|(n, m)| (*n, m.clone())).collect(),
            matrix: self.matrix.clone(),
            induced: self.induced.to_record(),
            final_norm: self.matrix.norm().to_string(),
            balance_ratio: balance_ratio(&self.matrix),
        }
    }
}

/// Serialized induction trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub start: IetRecord,
    pub steps: usize,
    pub moves: Vec<Move>,
    pub checkpoints: Vec<(usize, VisitationMatrix)>,
    pub matrix: VisitationMatrix,
    pub induced: IetRecord,
    pub final_norm: String,
    pub balance_ratio: f64,
}

/// Replays compact moves into full edges.
pub fn expand_moves(start: &LabeledPermutation, moves: &[Move]) -> Vec<RauzyEdge> {
    let mut pi = start.clone();
    let mut out = Vec::with_capacity(moves.len());
    for mv in moves {
        let e = crate::perm::rauzy_move(&pi, mv.side).expect("trace permutations are irreducible");
        debug_assert_eq!((e.winner, e.loser), (mv.winner, mv.loser));
        pi = e.target.clone();
        out.push(e);
    }
    out
}

/// Induces `n` times, recording `M(c)` at each checkpoint `c <= n`.
pub fn induct_with_checkpoints(
    t: &Iet,
    n: usize,
    checkpoints: &[usize],
) -> Result<InductionTrace, InductionError> {
    let mut trace = InductionTrace::empty(t);
    record_checkpoint(&mut trace, checkpoints);
    for k in 0..n {
        let Some((next, mv)) = raw_step(&trace.induced) else {
            return Err(InductionError::Undefined { step: k, partial: Box::new(trace) });
        };
        trace.matrix.push_step(mv.winner, mv.loser);
        trace.moves.push(mv);
        trace.induced = next;
        record_checkpoint(&mut trace, checkpoints);
    }
    Ok(trace)
}

fn record_checkpoint(trace: &mut InductionTrace, checkpoints: &[usize]) {
    let n = trace.moves.len();
    if checkpoints.contains(&n) {
        trace.checkpoints.push((n, trace.matrix.clone()));
    }
}

pub fn induct(t: &Iet, n: usize) -> Result<InductionTrace, InductionError> {
    induct_with_checkpoints(t, n, &[])
}

/// Stopping rules of `induct_until`.
#[derive(Clone, Debug, PartialEq)]
pub enum StopRule {
    /// `||M(n)|| >= N`.
    NormAtLeast(BigInt),
    /// First `n` with `2 ||M(n)|| >= N`: the matrix maximal for `N`.
    MaximalFor(BigInt),
    /// Current permutation equals the given one.
    Permutation(LabeledPermutation),
    /// All column sums within the factor `zeta` of one another.
    Balanced(f64),
    /// All entries at least one.
    Positive,
}

impl StopRule {
    pub fn holds(&self, m: &VisitationMatrix, pi: &LabeledPermutation) -> bool {
        match self {
            StopRule::NormAtLeast(n) => m.norm() >= *n,
            StopRule::MaximalFor(n) => m.norm() * 2 >= *n,
            StopRule::Permutation(p) => pi == p,
            StopRule::Balanced(zeta) => is_balanced(m, *zeta),
            StopRule::Positive => m.is_positive(),
        }
    }
}

/// `max |C_i| / min |C_i|`.
pub fn balance_ratio(m: &VisitationMatrix) -> f64 {
    let sums = m.column_sums();
    let max = sums.iter().max().expect("non-empty");
    let min = sums.iter().min().expect("non-empty");
    big_ratio_f64(max, min)
}

pub fn is_balanced(m: &VisitationMatrix, zeta: f64) -> bool {
    let sums = m.column_sums();
    let max = sums.iter().max().expect("non-empty");
    let min = sums.iter().min().expect("non-empty");
    // exact when zeta is an integer, which is the usual case
    if zeta.fract() == 0.0 && zeta < 1e15 {
        return *max <= min * BigInt::from(zeta as i64);
    }
    big_ratio_f64(max, min) <= zeta
}

/// Shortest trace whose end state satisfies `rule`.
pub fn induct_until(t: &Iet, rule: &StopRule, budget: usize) -> Result<InductionTrace, InductionError> {
    let mut trace = InductionTrace::empty(t);
    loop {
        if rule.holds(&trace.matrix, trace.induced.perm()) {
            return Ok(trace);
        }
        if trace.moves.len() >= budget {
            return Err(InductionError::Budget { budget, partial: Box::new(trace) });
        }
        let k = trace.moves.len();
        let Some((next, mv)) = raw_step(&trace.induced) else {
            return Err(InductionError::Undefined { step: k, partial: Box::new(trace) });
        };
        trace.matrix.push_step(mv.winner, mv.loser);
        trace.moves.push(mv);
        trace.induced = next;
    }
}

/// `n` iterates of `point`, starting with the point itself.
pub fn orbit(t: &Iet, point: &BigRational, n: usize) -> Result<Vec<BigRational>, InductionError> {
    let total = t.total();
    if point.is_negative() || *point >= total {
        return Err(InductionError::Domain(format_rational(point), format_rational(&total)));
    }
    let top = t.top_starts();
    let bottom = t.bottom_starts();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = point.clone();
    out.push(x.clone());
    for _ in 0..n {
        x = apply_with(&t.lengths, t.perm.top(), &top, &bottom, &x);
        out.push(x.clone());
    }
    Ok(out)
}

/// Integer-length exchange for long orbit computations.
///
/// Lengths are scaled to a common denominator and kept in `i128`.
#[derive(Clone, Debug)]
pub struct IntExchange {
    /// Top-row left endpoints, in top order.
    top_starts: Vec<i128>,
    /// Translation applied on each top interval, in top order.
    shifts: Vec<i128>,
    /// Symbol of each top interval, in top order.
    symbols: Vec<Symbol>,
    total: i128,
    scale: BigInt,
}

impl IntExchange {
    /// Fails if the scaled lengths do not fit.
    pub fn from_iet(t: &Iet) -> Option<Self> {
        let mut denom = BigInt::one();
        for x in t.lengths() {
            denom = num_integer::Integer::lcm(&denom, x.denom());
        }
        let scaled: Vec<BigInt> = t.lengths().iter().map(|x| (x * BigRational::from_integer(denom.clone())).to_integer()).collect();
        let total: BigInt = scaled.iter().sum();
        // leave headroom for additions during iteration
        if total.bits() > 120 {
            return None;
        }
        let lens: Vec<i128> = scaled.iter().map(|x| x.to_i128().expect("fits")).collect();
        Some(Self::from_parts(&lens, t.perm(), denom))
    }

    /// Builds from integer lengths directly.
    pub fn from_lengths(lens: &[i128], perm: &LabeledPermutation) -> Self {
        Self::from_parts(lens, perm, BigInt::one())
    }

    fn from_parts(lens: &[i128], perm: &LabeledPermutation, scale: BigInt) -> Self {
        let d = perm.d();
        let mut bottom_start = vec![0i128; d];
        let mut acc = 0i128;
        for &s in perm.bottom() {
            bottom_start[s as usize - 1] = acc;
            acc += lens[s as usize - 1];
        }
        let mut top_starts = Vec::with_capacity(d);
        let mut shifts = Vec::with_capacity(d);
        let mut acc = 0i128;
        for &s in perm.top() {
            top_starts.push(acc);
            shifts.push(bottom_start[s as usize - 1] - acc);
            acc += lens[s as usize - 1];
        }
        Self { top_starts, shifts, symbols: perm.top().to_vec(), total: acc, scale }
    }

    pub fn total(&self) -> i128 {
        self.total
    }

    /// Common denominator used for scaling.
    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    /// Position in top order of the interval containing `x`.
    fn slot(&self, x: i128) -> usize {
        self.top_starts.partition_point(|&s| s <= x) - 1
    }

    pub fn symbol_at(&self, x: i128) -> Symbol {
        self.symbols[self.slot(x)]
    }

    pub fn apply(&self, x: i128) -> i128 {
        x + self.shifts[self.slot(x)]
    }

    /// Interior discontinuities in scaled units.
    pub fn discontinuities(&self) -> &[i128] {
        &self.top_starts[1..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rat;
    use crate::perm::hyperelliptic_permutation;

    fn iet(lengths: &[(i64, i64)], pi: LabeledPermutation) -> Iet {
        Iet::new(lengths.iter().map(|&(n, d)| rat(n, d)).collect(), pi).unwrap()
    }

    #[test]
    fn two_interval_step() {
        let t = iet(&[(2, 3), (1, 3)], hyperelliptic_permutation(2).unwrap());
        let s = step(&t).unwrap();
        assert_eq!((s.edge.winner, s.edge.loser), (1, 2));
        assert_eq!(s.induced.lengths(), &[rat(1, 3), rat(1, 3)]);
        assert_eq!(s.matrix.column(0), vec![BigInt::from(1), BigInt::from(0)]);
        assert_eq!(s.matrix.column(1), vec![BigInt::from(1), BigInt::from(1)]);
        assert_eq!(s.matrix.mul_rat_vec(s.induced.lengths()), t.lengths());
        assert_eq!(normalized_step(&t).unwrap().lengths(), &[rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn equal_lengths_are_undefined() {
        let t = iet(&[(1, 2), (1, 2)], hyperelliptic_permutation(2).unwrap());
        assert_eq!(step(&t).unwrap_err().undefined_step(), Some(0));
    }

    #[test]
    fn zero_steps_is_identity() {
        let t = iet(&[(3, 7), (2, 7), (1, 7), (1, 7)], hyperelliptic_permutation(4).unwrap());
        let tr = induct(&t, 0).unwrap();
        assert_eq!(tr.matrix, VisitationMatrix::identity(4));
        assert_eq!(tr.induced, t);
    }

    #[test]
    fn ten_steps_cocycle_identity() {
        let t = iet(&[(3, 7), (2, 7), (1, 7), (1, 7)], hyperelliptic_permutation(4).unwrap());
        match induct(&t, 10) {
            Ok(tr) => assert_eq!(tr.matrix.mul_rat_vec(tr.induced.lengths()), t.lengths()),
            Err(InductionError::Undefined { partial, .. }) => {
                assert_eq!(partial.matrix.mul_rat_vec(partial.induced.lengths()), t.lengths())
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn norm_at_least_one_is_empty() {
        let t = iet(&[(3, 7), (2, 7), (1, 7), (1, 7)], hyperelliptic_permutation(4).unwrap());
        let tr = induct_until(&t, &StopRule::NormAtLeast(BigInt::one()), 10).unwrap();
        assert!(tr.is_empty());
    }

    #[test]
    fn rotation_orbits() {
        let half = iet(&[(1, 2), (1, 2)], hyperelliptic_permutation(2).unwrap());
        let o = orbit(&half, &rat(0, 1), 4).unwrap();
        assert_eq!(o, vec![rat(0, 1), rat(1, 2), rat(0, 1), rat(1, 2), rat(0, 1)]);
        let third = iet(&[(2, 3), (1, 3)], hyperelliptic_permutation(2).unwrap());
        let o = orbit(&third, &rat(0, 1), 3).unwrap();
        assert_eq!(o, vec![rat(0, 1), rat(1, 3), rat(2, 3), rat(0, 1)]);
        assert!(orbit(&third, &rat(1, 1), 1).is_err());
    }

    #[test]
    fn integer_exchange_agrees_with_exact() {
        let t = iet(&[(3, 10), (1, 5), (1, 4), (1, 4)], LabeledPermutation::parse("1 3 4 2/4 3 2 1").unwrap());
        let ie = IntExchange::from_iet(&t).unwrap();
        let scale = BigRational::from_integer(ie.scale().clone());
        let exact = orbit(&t, &rat(1, 20), 50).unwrap();
        let mut x = (rat(1, 20) * &scale).to_integer().to_i128().unwrap();
        for e in &exact[1..] {
            x = ie.apply(x);
            assert_eq!(BigRational::from_integer(BigInt::from(x)) / &scale, *e);
        }
    }
}
