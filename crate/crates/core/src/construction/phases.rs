//! Path segments of the construction and their generators.
//!
//! All five segment kinds live in the Rauzy class of the hyperelliptic
//! permutation `pi_s` and pivot around the hubs `pi_L` and `pi_R`. Steps are
//! stored run-length encoded: a run of more than one identical step is always
//! a self-loop of the diagram, so it costs one column operation whatever its
//! length.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schedule::NormWindow;
use crate::matrix::{decimal, IntMatrix, VisitationMatrix};
use crate::perm::{
    hyperelliptic_permutation, is_lhs_restriction_move, rauzy_class, rauzy_move, rauzy_subgraph,
    special_permutations, LabeledPermutation, PermError, RauzyClassGraph, RauzyEdge, Side, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    FreedomLhs,
    RestrictionLhs,
    Transition,
    FreedomRhs,
    RestrictionRhs,
    /// `1` beats `d` and then `d-1`, taking `pi_s` to `pi_L`.
    Connector,
    /// Only `1..d-2` win, from `pi_L` to `pi_s`; used for paths that keep a
    /// simplex away from a hyperplane.
    Avoiding,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::FreedomLhs => "freedom-lhs",
            Phase::RestrictionLhs => "restriction-lhs",
            Phase::Transition => "transition",
            Phase::FreedomRhs => "freedom-rhs",
            Phase::RestrictionRhs => "restriction-rhs",
            Phase::Connector => "connector",
            Phase::Avoiding => "avoiding",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("{phase}: step {index}: {reason}")]
    Grammar { phase: Phase, index: usize, reason: String },
    #[error("{phase}: no admissible path within {budget} steps")]
    Budget { phase: Phase, budget: usize },
    #[error("{phase}: {reason}")]
    Contract { phase: Phase, reason: String },
    #[error(transparent)]
    Perm(#[from] PermError),
}

/// `count` consecutive identical steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRun {
    pub winner: Symbol,
    pub loser: Symbol,
    pub side: Side,
    #[serde(with = "decimal")]
    pub count: BigInt,
}

/// A segment of a Rauzy path together with its matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePath {
    pub phase: Phase,
    pub start: LabeledPermutation,
    pub end: LabeledPermutation,
    pub runs: Vec<MoveRun>,
    pub matrix: VisitationMatrix,
    /// The norm left the requested window because one step jumped over it.
    pub widened: bool,
}

/// Largest number of steps `PhasePath::edges` expands.
pub const MAX_EXPANDED_STEPS: u64 = 10_000_000;

impl PhasePath {
    pub fn new(phase: Phase, start: LabeledPermutation) -> Self {
        let d = start.d();
        Self {
            phase,
            end: start.clone(),
            start,
            runs: Vec::new(),
            matrix: VisitationMatrix::identity(d),
            widened: false,
        }
    }

    /// Rebuilds a path from its runs, checking that every run is a legal
    /// sequence of moves.
    pub fn replay(phase: Phase, start: LabeledPermutation, runs: &[MoveRun]) -> Result<Self, PhaseError> {
        let mut path = Self::new(phase, start);
        for (index, run) in runs.iter().enumerate() {
            let edge = rauzy_move(&path.end, run.side)?;
            if (edge.winner, edge.loser) != (run.winner, run.loser) {
                return Err(PhaseError::Grammar {
                    phase,
                    index,
                    reason: format!("{} cannot beat {} at {}", run.winner, run.loser, path.end),
                });
            }
            if !run.count.is_positive() {
                return Err(PhaseError::Grammar { phase, index, reason: "empty run".into() });
            }
            if !run.count.is_one() && edge.source != edge.target {
                return Err(PhaseError::Grammar { phase, index, reason: "repeated step is not a self-loop".into() });
            }
            path.push_repeated(&edge, &run.count);
        }
        Ok(path)
    }

    pub fn d(&self) -> usize {
        self.start.d()
    }

    pub fn push(&mut self, edge: &RauzyEdge) {
        self.push_repeated(edge, &BigInt::one());
    }

    pub fn push_repeated(&mut self, edge: &RauzyEdge, count: &BigInt) {
        debug_assert_eq!(edge.source, self.end);
        debug_assert!(count.is_one() || edge.source == edge.target);
        self.matrix.push_repeated(edge.winner, edge.loser, count);
        match self.runs.last_mut() {
            Some(r) if (r.winner, r.loser, r.side) == (edge.winner, edge.loser, edge.side) => r.count += count,
            _ => self.runs.push(MoveRun {
                winner: edge.winner,
                loser: edge.loser,
                side: edge.side,
                count: count.clone(),
            }),
        }
        self.end = edge.target.clone();
    }

    /// Total number of Rauzy steps.
    pub fn steps(&self) -> BigInt {
        self.runs.iter().map(|r| &r.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn norm(&self) -> BigInt {
        self.matrix.norm()
    }

    /// Every edge of the path, or `None` beyond `MAX_EXPANDED_STEPS`.
    pub fn edges(&self) -> Option<Vec<RauzyEdge>> {
        if self.steps() > BigInt::from(MAX_EXPANDED_STEPS) {
            return None;
        }
        let mut out = Vec::new();
        let mut pi = self.start.clone();
        for r in &self.runs {
            for _ in 0..r.count.to_u64().expect("bounded above") {
                let e = rauzy_move(&pi, r.side).expect("replayed path is legal");
                pi = e.target.clone();
                out.push(e);
            }
        }
        Some(out)
    }

    /// Permutations visited after each run, the start excluded.
    pub fn visited(&self) -> Vec<LabeledPermutation> {
        let mut pi = self.start.clone();
        self.runs
            .iter()
            .map(|r| {
                pi = rauzy_move(&pi, r.side).expect("replayed path is legal").target;
                pi.clone()
            })
            .collect()
    }
}

/// Graph of admissible moves with distances to a target vertex.
#[derive(Debug, Clone)]
struct Navigator {
    graph: RauzyClassGraph,
    out: Vec<Vec<usize>>,
    dist: Vec<Option<usize>>,
    target: usize,
    blocked: Vec<bool>,
}

impl Navigator {
    /// Paths may start at a blocked vertex but never pass through one.
    fn new(graph: RauzyClassGraph, target: &LabeledPermutation, blocked: &[&LabeledPermutation]) -> Self {
        let n = graph.vertices.len();
        let target = graph.index_of(target).expect("target in graph");
        let mut is_blocked = vec![false; n];
        for b in blocked {
            if let Some(i) = graph.index_of(b) {
                is_blocked[i] = true;
            }
        }
        let mut out = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for (i, e) in graph.edges.iter().enumerate() {
            out[e.source].push(i);
            incoming[e.target].push(e.source);
        }
        let mut dist = vec![None; n];
        dist[target] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            if u != target && is_blocked[u] {
                continue;
            }
            for &s in &incoming[u] {
                if dist[s].is_none() {
                    dist[s] = Some(dist[u].expect("set") + 1);
                    queue.push_back(s);
                }
            }
        }
        Self { graph, out, dist, target, blocked: is_blocked }
    }

    fn index(&self, pi: &LabeledPermutation) -> Option<usize> {
        self.graph.index_of(pi)
    }

    /// Out-edges that keep the target reachable, as `(edge, next vertex)`.
    fn options(&self, v: usize) -> Vec<(RauzyEdge, usize)> {
        self.out[v]
            .iter()
            .map(|&i| &self.graph.edges[i])
            .filter(|e| self.dist[e.target].is_some() && (e.target == self.target || !self.blocked[e.target]))
            .map(|e| {
                let edge = RauzyEdge {
                    source: self.graph.vertices[e.source].clone(),
                    target: self.graph.vertices[e.target].clone(),
                    winner: e.winner,
                    loser: e.loser,
                    side: e.side,
                };
                (edge, e.target)
            })
            .collect()
    }
}

/// Parameters of the random generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Probability of taking the norm-maximizing move instead of a uniform one.
    pub growth_bias: f64,
    pub step_budget: usize,
    /// Redraws of a freedom segment that is not balanced enough.
    pub balance_attempts: usize,
    /// Largest count of `d-1` beating `d` inside one right freedom loop.
    pub max_loop_power: u64,
    /// Largest number of free steps before a transition heads for `pi_s`.
    pub transition_free_steps: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            growth_bias: 0.25,
            step_budget: 1_000_000,
            balance_attempts: 64,
            max_loop_power: 3,
            transition_free_steps: 6,
        }
    }
}

/// Everything the generators need to know about the class for one `d`.
#[derive(Debug, Clone)]
pub struct PhaseContext {
    pub d: usize,
    /// `pi_s`.
    pub hyperelliptic: LabeledPermutation,
    /// `pi_L`.
    pub left: LabeledPermutation,
    /// `pi_R`.
    pub right: LabeledPermutation,
    /// `pi'`.
    pub pre_hyperelliptic: LabeledPermutation,
    freedom: Navigator,
    restriction: Navigator,
    transition: Navigator,
}

fn top_symbols(d: usize) -> (Symbol, Symbol) {
    ((d - 1) as Symbol, d as Symbol)
}

impl PhaseContext {
    pub fn new(d: usize) -> Result<Self, PhaseError> {
        let special = special_permutations(d)?;
        let hyper = hyperelliptic_permutation(d)?;
        let (a, b) = top_symbols(d);
        let freedom_graph = rauzy_subgraph(&special.left, |e| e.winner != a && e.winner != b)?;
        let freedom = Navigator::new(freedom_graph, &hyper, &[]);
        let restriction_graph = rauzy_subgraph(&special.left, |e| is_lhs_restriction_move(d, e.winner, e.loser))?;
        let restriction = Navigator::new(restriction_graph, &special.left, &[]);
        let transition = Navigator::new(rauzy_class(&hyper)?, &hyper, &[&special.left]);
        Ok(Self {
            d,
            hyperelliptic: hyper,
            left: special.left,
            right: special.right,
            pre_hyperelliptic: special.pre_hyperelliptic,
            freedom,
            restriction,
            transition,
        })
    }

    /// Graph distance from `pi_L` to `pi_s` avoiding `pi_L` in between.
    pub fn transition_distance(&self) -> usize {
        let n = &self.transition;
        n.dist[n.index(&self.left).expect("pi_L in class")].expect("pi_s reachable")
    }
}

/// Applies `winner beats loser` `count` times at the end of `path`.
pub(super) fn beat(path: &mut PhasePath, winner: Symbol, loser: Symbol, count: &BigInt) -> Result<(), PhaseError> {
    let side = match path.end.side_of_winner(winner) {
        Some(side) if path.end.contest(side) == (winner, loser) => side,
        _ => {
            return Err(PhaseError::Grammar {
                phase: path.phase,
                index: path.runs.len(),
                reason: format!("{winner} cannot beat {loser} at {}", path.end),
            })
        }
    };
    let edge = rauzy_move(&path.end, side)?;
    if !count.is_one() && edge.source != edge.target {
        return Err(PhaseError::Grammar {
            phase: path.phase,
            index: path.runs.len(),
            reason: "repeated step is not a self-loop".into(),
        });
    }
    path.push_repeated(&edge, count);
    Ok(())
}

pub(super) fn beat_once(path: &mut PhasePath, winner: Symbol, loser: Symbol) -> Result<(), PhaseError> {
    beat(path, winner, loser, &BigInt::one())
}

struct WalkSpec<'a> {
    phase: Phase,
    nav: &'a Navigator,
    start: &'a LabeledPermutation,
    window: &'a NormWindow,
    first_winner: Option<Symbol>,
}

/// Random admissible walk that heads for the target once the norm reaches
/// the window.
fn walk<R: Rng + ?Sized>(spec: &WalkSpec<'_>, cfg: &GeneratorConfig, rng: &mut R) -> Result<PhasePath, PhaseError> {
    let nav = spec.nav;
    let mut v = nav.index(spec.start).ok_or_else(|| PhaseError::Contract {
        phase: spec.phase,
        reason: format!("start {} is outside the admissible graph", spec.start),
    })?;
    let mut path = PhasePath::new(spec.phase, spec.start.clone());
    let mut steps = 0usize;
    let mut norm = BigInt::one();
    loop {
        if steps > 0 && v == nav.target && norm >= spec.window.lo {
            break;
        }
        if steps >= cfg.step_budget {
            return Err(PhaseError::Budget { phase: spec.phase, budget: cfg.step_budget });
        }
        let mut options = nav.options(v);
        if steps == 0 {
            if let Some(w) = spec.first_winner {
                options.retain(|(e, _)| e.winner == w);
            }
        }
        if options.is_empty() {
            return Err(PhaseError::Grammar {
                phase: spec.phase,
                index: steps,
                reason: format!("no admissible move at {}", nav.graph.vertices[v]),
            });
        }
        let pick = if norm >= spec.window.lo {
            let best = options.iter().filter_map(|(_, t)| nav.dist[*t]).min().expect("non-empty");
            options.iter().position(|(_, t)| nav.dist[*t] == Some(best)).expect("present")
        } else if options.len() > 1 && rng.gen::<f64>() < cfg.growth_bias {
            let mut best = (0, BigInt::zero());
            for (i, (e, _)) in options.iter().enumerate() {
                let mut m = path.matrix.clone();
                m.push_step(e.winner, e.loser);
                let n = m.norm();
                if n > best.1 {
                    best = (i, n);
                }
            }
            best.0
        } else {
            rng.gen_range(0..options.len())
        };
        let (edge, next) = options.swap_remove(pick);
        path.push(&edge);
        norm = path.norm();
        v = next;
        steps += 1;
    }
    if norm > spec.window.hi {
        log::warn!("{}: norm {} overshoots the window [{}, {}]; widening", spec.phase, norm, spec.window.lo, spec.window.hi);
        path.widened = true;
    }
    Ok(path)
}

/// Freedom on the left: from `pi_L`, `1` wins first, `d-1` and `d` never
/// win, and the path ends at `pi_s` once the norm reaches the window. The
/// path may pass through `pi_s` on the way.
pub fn gen_freedom_lhs<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    window: &NormWindow,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<PhasePath, PhaseError> {
    let spec = WalkSpec {
        phase: Phase::FreedomLhs,
        nav: &ctx.freedom,
        start: &ctx.left,
        window,
        first_winner: Some(1),
    };
    walk(&spec, cfg, rng)
}

/// Restriction on the left: from `pi_L` back to `pi_L` while `1` never wins
/// and `d-1`, `d` are never compared.
pub fn gen_restriction_lhs<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    window: &NormWindow,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<PhasePath, PhaseError> {
    let nav = &ctx.restriction;
    if nav.graph.vertices.len() == 1 {
        // d = 4: a single self-loop, `2` beating `1`, adds C_2 into C_1.
        let e = &nav.graph.edges[0];
        let mut path = PhasePath::new(Phase::RestrictionLhs, ctx.left.clone());
        let lo = (&window.lo - BigInt::one()).max(BigInt::one());
        let hi = (&window.hi - BigInt::one()).max(lo.clone());
        let count = rng.gen_bigint_range(&lo, &(hi + 1));
        beat(&mut path, e.winner, e.loser, &count)?;
        return Ok(path);
    }
    let spec = WalkSpec { phase: Phase::RestrictionLhs, nav, start: &ctx.left, window, first_winner: None };
    walk(&spec, cfg, rng)
}

/// From `pi_L` to `pi_s`, never returning to `pi_L` and meeting `pi_s` only
/// at the end; falls back to a shortest path when the norm exceeds `t_max`.
pub fn gen_transition<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    t_max: &BigInt,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<PhasePath, PhaseError> {
    let nav = &ctx.transition;
    let build = |free: usize, rng: &mut R| -> PhasePath {
        let mut path = PhasePath::new(Phase::Transition, ctx.left.clone());
        let mut v = nav.index(&ctx.left).expect("pi_L in class");
        for _ in 0..free {
            let options: Vec<_> = nav.options(v).into_iter().filter(|(_, t)| *t != nav.target).collect();
            if options.is_empty() {
                break;
            }
            let (edge, next) = options[rng.gen_range(0..options.len())].clone();
            path.push(&edge);
            v = next;
        }
        while v != nav.target {
            let options = nav.options(v);
            let best = options.iter().filter_map(|(_, t)| nav.dist[*t]).min().expect("target reachable");
            let (edge, next) = options.into_iter().find(|(_, t)| nav.dist[*t] == Some(best)).expect("present");
            path.push(&edge);
            v = next;
        }
        path
    };
    let free = rng.gen_range(0..=cfg.transition_free_steps);
    let path = build(free, rng);
    if path.norm() <= *t_max {
        return Ok(path);
    }
    let mut path = build(0, rng);
    if path.norm() > *t_max {
        log::warn!("transition: shortest path has norm {} above the bound {}", path.norm(), t_max);
        path.widened = true;
    }
    Ok(path)
}

fn rhs_prefix(path: &mut PhasePath) -> Result<(), PhaseError> {
    let d = path.d() as Symbol;
    for i in 1..=d - 2 {
        beat_once(path, d, i)?;
    }
    Ok(())
}

fn rhs_loop(path: &mut PhasePath, power: &BigInt) -> Result<(), PhaseError> {
    let d = path.d() as Symbol;
    if power.is_positive() {
        beat(path, d - 1, d, power)?;
    }
    beat_once(path, d, d - 1)?;
    rhs_prefix(path)
}

/// Freedom on the right with prescribed loop powers: from `pi_s`, `d` beats
/// `1..d-2` to reach `pi_R`; each loop is `d-1` beating `d` `j` times, `d`
/// beating `d-1`, and `d` beating `1..d-2` again.
pub fn freedom_rhs_path(ctx: &PhaseContext, pattern: &[u64]) -> Result<PhasePath, PhaseError> {
    let mut path = PhasePath::new(Phase::FreedomRhs, ctx.hyperelliptic.clone());
    rhs_prefix(&mut path)?;
    for &j in pattern {
        rhs_loop(&mut path, &BigInt::from(j))?;
    }
    Ok(path)
}

/// Column effect of one right freedom loop, used to look ahead.
fn rhs_loop_matrix(m: &VisitationMatrix, power: u64) -> VisitationMatrix {
    let d = m.d() as Symbol;
    let mut out = m.clone();
    out.push_repeated(d - 1, d, &BigInt::from(power));
    out.push_step(d, d - 1);
    for i in 1..=d - 2 {
        out.push_step(d, i);
    }
    out
}

/// Random loop powers until the norm enters the window; a power that would
/// jump over the window is lowered when possible.
pub fn gen_freedom_rhs<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    window: &NormWindow,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<PhasePath, PhaseError> {
    let mut path = freedom_rhs_path(ctx, &[])?;
    let mut loops = 0usize;
    while path.norm() < window.lo {
        if loops >= cfg.step_budget {
            return Err(PhaseError::Budget { phase: Phase::FreedomRhs, budget: cfg.step_budget });
        }
        let mut j = rng.gen_range(1..=cfg.max_loop_power.max(1));
        while j > 1 && rhs_loop_matrix(&path.matrix, j).norm() > window.hi {
            j -= 1;
        }
        rhs_loop(&mut path, &BigInt::from(j))?;
        loops += 1;
    }
    if path.norm() > window.hi {
        log::warn!("freedom-rhs: norm {} overshoots the window [{}, {}]; widening", path.norm(), window.lo, window.hi);
        path.widened = true;
    }
    Ok(path)
}

/// Restriction on the right: at `pi_R`, `d-1` beats `d` `count` times and
/// then `d` beats `d-1`, returning to `pi_s`.
pub fn restriction_rhs_path(ctx: &PhaseContext, count: &BigInt) -> Result<PhasePath, PhaseError> {
    if count.is_negative() {
        return Err(PhaseError::Contract { phase: Phase::RestrictionRhs, reason: "negative count".into() });
    }
    let d = ctx.d as Symbol;
    let mut path = PhasePath::new(Phase::RestrictionRhs, ctx.right.clone());
    if count.is_positive() {
        beat(&mut path, d - 1, d, count)?;
    }
    beat_once(&mut path, d, d - 1)?;
    Ok(path)
}

/// Count whose restriction path has its norm, `count + 2`, inside `window`.
pub fn sample_restriction_count<R: Rng + ?Sized>(window: &NormWindow, rng: &mut R) -> Result<BigInt, PhaseError> {
    let two = BigInt::from(2);
    let lo = (&window.lo - &two).max(BigInt::one());
    let hi = &window.hi - &two;
    if hi < lo {
        return Err(PhaseError::Contract {
            phase: Phase::RestrictionRhs,
            reason: format!("window [{}, {}] admits no count", window.lo, window.hi),
        });
    }
    Ok(rng.gen_bigint_range(&lo, &(hi + 1)))
}

pub fn gen_restriction_rhs<R: Rng + ?Sized>(
    ctx: &PhaseContext,
    window: &NormWindow,
    rng: &mut R,
) -> Result<PhasePath, PhaseError> {
    let count = sample_restriction_count(window, rng)?;
    restriction_rhs_path(ctx, &count)
}

/// `pi_s` to `pi_L`.
pub fn connector_path(ctx: &PhaseContext) -> Result<PhasePath, PhaseError> {
    let d = ctx.d as Symbol;
    let mut path = PhasePath::new(Phase::Connector, ctx.hyperelliptic.clone());
    beat_once(&mut path, 1, d)?;
    beat_once(&mut path, 1, d - 1)?;
    Ok(path)
}

fn violation(phase: Phase, index: usize, reason: impl Into<String>) -> PhaseError {
    PhaseError::Grammar { phase, index, reason: reason.into() }
}

/// Scans every run of `path` against the rules of its phase, replays it, and
/// recomputes its matrix.
pub fn validate(ctx: &PhaseContext, path: &PhasePath) -> Result<(), PhaseError> {
    let phase = path.phase;
    let replayed = PhasePath::replay(phase, path.start.clone(), &path.runs)?;
    if replayed.end != path.end {
        return Err(violation(phase, path.runs.len(), "recorded end differs from the replayed end"));
    }
    if replayed.matrix != path.matrix {
        return Err(violation(phase, path.runs.len(), "recorded matrix differs from the product of its steps"));
    }
    let d = ctx.d as Symbol;
    let expect_ends = |start: &LabeledPermutation, end: &LabeledPermutation| -> Result<(), PhaseError> {
        if path.start != *start {
            return Err(violation(phase, 0, format!("starts at {} instead of {}", path.start, start)));
        }
        if path.end != *end {
            return Err(violation(phase, path.runs.len(), format!("ends at {} instead of {}", path.end, end)));
        }
        Ok(())
    };
    match phase {
        Phase::FreedomLhs => {
            expect_ends(&ctx.left, &ctx.hyperelliptic)?;
            match path.runs.first() {
                Some(r) if r.winner == 1 => {}
                _ => return Err(violation(phase, 0, "1 does not win first")),
            }
            if let Some(i) = path.runs.iter().position(|r| r.winner >= d - 1) {
                return Err(violation(phase, i, format!("{} wins", path.runs[i].winner)));
            }
        }
        Phase::RestrictionLhs => {
            expect_ends(&ctx.left, &ctx.left)?;
            if path.runs.is_empty() {
                return Err(violation(phase, 0, "empty restriction"));
            }
            if let Some(i) = path.runs.iter().position(|r| !is_lhs_restriction_move(ctx.d, r.winner, r.loser)) {
                return Err(violation(phase, i, format!("{} beats {}", path.runs[i].winner, path.runs[i].loser)));
            }
        }
        Phase::Transition => {
            expect_ends(&ctx.left, &ctx.hyperelliptic)?;
            let visited = path.visited();
            for (i, pi) in visited.iter().enumerate() {
                let last = i + 1 == visited.len();
                if *pi == ctx.left {
                    return Err(violation(phase, i, "returns to pi_L"));
                }
                if !last && *pi == ctx.hyperelliptic {
                    return Err(violation(phase, i, "meets pi_s before the end"));
                }
            }
        }
        Phase::FreedomRhs => {
            expect_ends(&ctx.hyperelliptic, &ctx.right)?;
            let prefix: Vec<(Symbol, Symbol)> = (1..=d - 2).map(|i| (d, i)).collect();
            let labels: Vec<(Symbol, Symbol, bool)> =
                path.runs.iter().map(|r| (r.winner, r.loser, r.count.is_one())).collect();
            let mut i = 0;
            let expect_prefix = |i: &mut usize| -> Result<(), PhaseError> {
                for &(w, l) in &prefix {
                    match labels.get(*i) {
                        Some(&(a, b, true)) if (a, b) == (w, l) => *i += 1,
                        _ => return Err(violation(phase, *i, format!("expected {w} to beat {l}"))),
                    }
                }
                Ok(())
            };
            expect_prefix(&mut i)?;
            while i < labels.len() {
                if labels[i].0 == d - 1 && labels[i].1 == d {
                    i += 1;
                }
                match labels.get(i) {
                    Some(&(a, b, true)) if a == d && b == d - 1 => i += 1,
                    _ => return Err(violation(phase, i, format!("expected {d} to beat {}", d - 1))),
                }
                expect_prefix(&mut i)?;
            }
        }
        Phase::RestrictionRhs => {
            expect_ends(&ctx.right, &ctx.hyperelliptic)?;
            let n = path.runs.len();
            let ok_tail = path.runs.last().is_some_and(|r| r.winner == d && r.loser == d - 1 && r.count.is_one());
            let ok_head = n == 1 || (n == 2 && path.runs[0].winner == d - 1 && path.runs[0].loser == d);
            if !ok_tail || !ok_head {
                return Err(violation(phase, 0, "not of the form (d-1 beats d)^l, d beats d-1"));
            }
        }
        Phase::Connector => {
            expect_ends(&ctx.hyperelliptic, &ctx.left)?;
            let labels: Vec<(Symbol, Symbol)> = path.runs.iter().map(|r| (r.winner, r.loser)).collect();
            if labels != [(1, d), (1, d - 1)] {
                return Err(violation(phase, 0, "connector must be 1 beating d then d-1"));
            }
        }
        Phase::Avoiding => {
            expect_ends(&ctx.left, &ctx.hyperelliptic)?;
            if let Some(i) = path.runs.iter().position(|r| r.winner >= d - 1) {
                return Err(violation(phase, i, format!("{} wins", path.runs[i].winner)));
            }
        }
    }
    Ok(())
}

/// `max |C_i| / min |C_i|` over the columns in `cols` (0-based).
pub fn column_ratio(m: &IntMatrix, cols: std::ops::Range<usize>) -> f64 {
    let sums: Vec<BigInt> = cols.map(|j| m.column_sum(j)).collect();
    let max = sums.iter().max().expect("non-empty");
    let min = sums.iter().min().expect("non-empty");
    crate::matrix::big_ratio_f64(max, min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn window(lo: i64, hi: i64) -> NormWindow {
        NormWindow { lo: BigInt::from(lo), hi: BigInt::from(hi) }
    }

    #[test]
    fn restriction_rhs_minimal_block() {
        let ctx = PhaseContext::new(4).unwrap();
        let p = restriction_rhs_path(&ctx, &BigInt::one()).unwrap();
        assert_eq!(p.end, ctx.hyperelliptic);
        let m = p.matrix.as_matrix();
        let block: Vec<i64> = [(2, 2), (2, 3), (3, 2), (3, 3)]
            .iter()
            .map(|&(i, j)| m.get(i, j).to_i64().unwrap())
            .collect();
        assert_eq!(block, vec![2, 1, 1, 1]);
        for j in 0..2 {
            assert_eq!(m.column(j), IntMatrix::identity(4).column(j));
        }
        validate(&ctx, &p).unwrap();
    }

    #[test]
    fn freedom_rhs_pattern_matches_direct_product() {
        let ctx = PhaseContext::new(4).unwrap();
        let p = freedom_rhs_path(&ctx, &[1, 2, 1]).unwrap();
        validate(&ctx, &p).unwrap();
        let mut m = VisitationMatrix::identity(4);
        let mut steps: Vec<(Symbol, Symbol)> = vec![(4, 1), (4, 2)];
        for j in [1, 2, 1] {
            steps.extend(std::iter::repeat((3, 4)).take(j));
            steps.extend([(4, 3), (4, 1), (4, 2)]);
        }
        for (w, l) in steps {
            m = m.then(&VisitationMatrix::elementary(4, w, l));
        }
        assert_eq!(p.matrix, m);
        assert_eq!(p.end, ctx.right);
    }

    #[test]
    fn connector_and_transition_for_d4() {
        let ctx = PhaseContext::new(4).unwrap();
        let c = connector_path(&ctx).unwrap();
        validate(&ctx, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = gen_transition(&ctx, &BigInt::from(10), &GeneratorConfig::default(), &mut rng).unwrap();
        validate(&ctx, &t).unwrap();
        assert_eq!(t.steps(), BigInt::from(ctx.transition_distance()));
    }

    #[test]
    fn generated_phases_follow_their_grammar() {
        let cfg = GeneratorConfig::default();
        for d in [4, 5, 6] {
            let ctx = PhaseContext::new(d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
            for _ in 0..10 {
                let w = window(1_000, 100_000);
                let a = gen_freedom_lhs(&ctx, &w, &cfg, &mut rng).unwrap();
                validate(&ctx, &a).unwrap();
                assert!(a.norm() >= w.lo);
                let r = gen_restriction_lhs(&ctx, &w, &cfg, &mut rng).unwrap();
                validate(&ctx, &r).unwrap();
                let first_row: Vec<BigInt> = r.matrix.row(0);
                assert!(first_row[0].is_one() && first_row[1..].iter().all(Zero::is_zero));
                let b = gen_freedom_rhs(&ctx, &w, &cfg, &mut rng).unwrap();
                validate(&ctx, &b).unwrap();
                assert!(w.contains(&b.norm()));
                let t = gen_transition(&ctx, &BigInt::from(1_000), &cfg, &mut rng).unwrap();
                validate(&ctx, &t).unwrap();
            }
        }
    }

    #[test]
    fn grammar_violations_are_detected() {
        let ctx = PhaseContext::new(4).unwrap();
        let mut p = freedom_rhs_path(&ctx, &[]).unwrap();
        p.phase = Phase::FreedomLhs;
        assert!(validate(&ctx, &p).is_err());
        let mut q = connector_path(&ctx).unwrap();
        q.matrix = VisitationMatrix::identity(4);
        assert!(validate(&ctx, &q).is_err());
    }
}
