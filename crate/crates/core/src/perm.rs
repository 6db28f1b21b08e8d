//! Labeled permutations, Rauzy moves and Rauzy-class enumeration.
//!
//! A permutation is stored as its two rows of symbols, exactly as they are
//! drawn: `top` lists the intervals in their order before the exchange and
//! `bottom` their order afterwards. Symbols are `1..=d`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interval label, `1..=d`.
pub type Symbol = u8;

/// Largest alphabet the crate accepts.
pub const MAX_ALPHABET: usize = 64;

/// Default vertex budget for class enumeration.
pub const DEFAULT_VERTEX_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("invalid alphabet size {0}: need 2 <= d <= {MAX_ALPHABET}")]
    InvalidAlphabet(usize),
    #[error("dimension {0} is not supported by this construction (need d >= {1})")]
    UnsupportedDimension(usize, usize),
    #[error("rows are not permutations of 1..={0}")]
    NotAPermutation(usize),
    #[error("permutation {0} is reducible")]
    Reducible(String),
    #[error("class enumeration exceeded the vertex budget of {0}")]
    BudgetExceeded(usize),
    #[error("restriction subgraph for d = {0} is degenerate")]
    DegenerateRestriction(usize),
    #[error("cannot parse permutation: {0}")]
    Parse(String),
}

/// Which row's last symbol wins the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// The last top symbol wins; the bottom row is rewritten.
    TopWins,
    /// The last bottom symbol wins; the top row is rewritten.
    BottomWins,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::TopWins, Side::BottomWins];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::TopWins => "top-wins",
            Side::BottomWins => "bottom-wins",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The combinatorial datum of an interval exchange.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledPermutation {
    top: Vec<Symbol>,
    bottom: Vec<Symbol>,
    irreducible: bool,
}

impl LabeledPermutation {
    pub fn new(top: Vec<Symbol>, bottom: Vec<Symbol>) -> Result<Self, PermError> {
        let d = top.len();
        if !(2..=MAX_ALPHABET).contains(&d) {
            return Err(PermError::InvalidAlphabet(d));
        }
        if bottom.len() != d || !is_permutation(&top) || !is_permutation(&bottom) {
            return Err(PermError::NotAPermutation(d));
        }
        let irreducible = compute_irreducible(&top, &bottom);
        Ok(Self { top, bottom, irreducible })
    }

    /// Rows are known to be valid permutations; only the flag is recomputed.
    fn from_rows_unchecked(top: Vec<Symbol>, bottom: Vec<Symbol>) -> Self {
        let irreducible = compute_irreducible(&top, &bottom);
        Self { top, bottom, irreducible }
    }

    pub fn d(&self) -> usize {
        self.top.len()
    }

    pub fn top(&self) -> &[Symbol] {
        &self.top
    }

    pub fn bottom(&self) -> &[Symbol] {
        &self.bottom
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn last_top(&self) -> Symbol {
        *self.top.last().expect("non-empty row")
    }

    pub fn last_bottom(&self) -> Symbol {
        *self.bottom.last().expect("non-empty row")
    }

    /// Winner and loser of the comparison at this permutation when `side` wins.
    pub fn contest(&self, side: Side) -> (Symbol, Symbol) {
        match side {
            Side::TopWins => (self.last_top(), self.last_bottom()),
            Side::BottomWins => (self.last_bottom(), self.last_top()),
        }
    }

    /// Side on which `winner` sits at the end of a row, if it does.
    pub fn side_of_winner(&self, winner: Symbol) -> Option<Side> {
        if self.last_top() == winner {
            Some(Side::TopWins)
        } else if self.last_bottom() == winner {
            Some(Side::BottomWins)
        } else {
            None
        }
    }

    /// Position of `s` in the top row (0-based).
    pub fn top_position(&self, s: Symbol) -> usize {
        self.top.iter().position(|&x| x == s).expect("symbol in row")
    }

    /// Position of `s` in the bottom row (0-based).
    pub fn bottom_position(&self, s: Symbol) -> usize {
        self.bottom.iter().position(|&x| x == s).expect("symbol in row")
    }

    /// Target of the Rauzy move; the caller guarantees irreducibility.
    pub(crate) fn moved(&self, side: Side) -> LabeledPermutation {
        let (winner, loser) = self.contest(side);
        let rewrite = |row: &[Symbol]| -> Vec<Symbol> {
            let mut out: Vec<Symbol> = row[..row.len() - 1].to_vec();
            let at = out.iter().position(|&x| x == winner).expect("winner in row");
            out.insert(at + 1, loser);
            out
        };
        match side {
            Side::TopWins => Self::from_rows_unchecked(self.top.clone(), rewrite(&self.bottom)),
            Side::BottomWins => Self::from_rows_unchecked(rewrite(&self.top), self.bottom.clone()),
        }
    }

    /// Parses `"1 2 3 4/4 3 2 1"` (top row, slash, bottom row; commas or spaces).
    pub fn parse(text: &str) -> Result<Self, PermError> {
        let (t, b) = text
            .split_once('/')
            .ok_or_else(|| PermError::Parse(format!("expected 'top/bottom', got {text:?}")))?;
        let row = |s: &str| -> Result<Vec<Symbol>, PermError> {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<Symbol>().map_err(|e| PermError::Parse(e.to_string())))
                .collect()
        };
        Self::new(row(t)?, row(b)?)
    }
}

impl fmt::Debug for LabeledPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LabeledPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |r: &[Symbol]| r.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "({} / {})", row(&self.top), row(&self.bottom))
    }
}

#[derive(Serialize, Deserialize)]
struct PermRows {
    top: Vec<Symbol>,
    bottom: Vec<Symbol>,
}

impl Serialize for LabeledPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PermRows { top: self.top.clone(), bottom: self.bottom.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let rows = PermRows::deserialize(de)?;
        LabeledPermutation::new(rows.top, rows.bottom).map_err(serde::de::Error::custom)
    }
}

fn is_permutation(row: &[Symbol]) -> bool {
    let d = row.len();
    let mut seen = vec![false; d + 1];
    for &s in row {
        let s = s as usize;
        if s == 0 || s > d || seen[s] {
            return false;
        }
        seen[s] = true;
    }
    true
}

fn compute_irreducible(top: &[Symbol], bottom: &[Symbol]) -> bool {
    // a proper prefix pair with equal symbol sets splits the exchange
    let d = top.len();
    // bit 0: seen on top, bit 1: seen on bottom
    let mut seen = vec![0u8; d + 1];
    let mut common = 0usize;
    for k in 0..d - 1 {
        for (s, bit) in [(top[k] as usize, 1u8), (bottom[k] as usize, 2u8)] {
            seen[s] |= bit;
            if seen[s] == 3 {
                common += 1;
            }
        }
        if common == k + 1 {
            return false;
        }
    }
    true
}

/// Compact label of one Rauzy step: who won, who lost, which row won.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub winner: Symbol,
    pub loser: Symbol,
    pub side: Side,
}

/// A directed edge of a Rauzy diagram.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RauzyEdge {
    pub source: LabeledPermutation,
    pub target: LabeledPermutation,
    pub winner: Symbol,
    pub loser: Symbol,
    pub side: Side,
}

impl RauzyEdge {
    pub fn label(&self) -> Move {
        Move { winner: self.winner, loser: self.loser, side: self.side }
    }
}

/// Applies one Rauzy move to `pi`.
pub fn rauzy_move(pi: &LabeledPermutation, side: Side) -> Result<RauzyEdge, PermError> {
    if !pi.is_irreducible() {
        return Err(PermError::Reducible(pi.to_string()));
    }
    let (winner, loser) = pi.contest(side);
    Ok(RauzyEdge { source: pi.clone(), target: pi.moved(side), winner, loser, side })
}

fn check_alphabet(d: usize, min: usize) -> Result<(), PermError> {
    if !(2..=MAX_ALPHABET).contains(&d) {
        return Err(PermError::InvalidAlphabet(d));
    }
    if d < min {
        return Err(PermError::UnsupportedDimension(d, min));
    }
    Ok(())
}

/// `top = (1..d)`, `bottom = (d..1)`.
pub fn hyperelliptic_permutation(d: usize) -> Result<LabeledPermutation, PermError> {
    check_alphabet(d, 2)?;
    let top: Vec<Symbol> = (1..=d as Symbol).collect();
    let bottom: Vec<Symbol> = top.iter().rev().copied().collect();
    Ok(LabeledPermutation::from_rows_unchecked(top, bottom))
}

/// The three permutations the staged construction pivots around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialPermutations {
    /// Left-hand-side hub.
    pub left: LabeledPermutation,
    /// Right-hand-side hub.
    pub right: LabeledPermutation,
    /// One step before the hyperelliptic permutation along `1 beats 2`.
    pub pre_hyperelliptic: LabeledPermutation,
}

pub fn special_permutations(d: usize) -> Result<SpecialPermutations, PermError> {
    check_alphabet(d, 4)?;
    let dd = d as Symbol;
    let descending: Vec<Symbol> = (1..=dd).rev().collect();

    let mut left_top = vec![1, dd - 1, dd];
    left_top.extend(2..=dd - 2);
    let left = LabeledPermutation::from_rows_unchecked(left_top, descending.clone());

    let mut right_bottom = vec![dd];
    right_bottom.extend((1..=dd - 2).rev());
    right_bottom.push(dd - 1);
    let right = LabeledPermutation::from_rows_unchecked((1..=dd).collect(), right_bottom);

    let mut pre_top = vec![1];
    pre_top.extend(3..=dd);
    pre_top.push(2);
    let pre_hyperelliptic = LabeledPermutation::from_rows_unchecked(pre_top, descending);

    Ok(SpecialPermutations { left, right, pre_hyperelliptic })
}

/// An edge of an enumerated graph, by vertex index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassEdge {
    pub source: usize,
    pub target: usize,
    pub winner: Symbol,
    pub loser: Symbol,
    pub side: Side,
}

/// A set of permutations with labeled Rauzy edges between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RauzyClassGraph {
    /// Sorted lexicographically on `(top, bottom)`.
    pub vertices: Vec<LabeledPermutation>,
    /// Sorted by `(source, side)`.
    pub edges: Vec<ClassEdge>,
}

impl RauzyClassGraph {
    fn from_parts(vertices: BTreeSet<LabeledPermutation>, edges: Vec<RauzyEdge>) -> Self {
        let vertices: Vec<_> = vertices.into_iter().collect();
        let index: HashMap<&LabeledPermutation, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut edges: Vec<ClassEdge> = edges
            .iter()
            .map(|e| ClassEdge {
                source: index[&e.source],
                target: index[&e.target],
                winner: e.winner,
                loser: e.loser,
                side: e.side,
            })
            .collect();
        edges.sort_by_key(|e| (e.source, e.side, e.target));
        drop(index);
        Self { vertices, edges }
    }

    pub fn index_of(&self, pi: &LabeledPermutation) -> Option<usize> {
        self.vertices.binary_search(pi).ok()
    }

    pub fn contains(&self, pi: &LabeledPermutation) -> bool {
        self.index_of(pi).is_some()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.source] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.target] += 1;
        }
        deg
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("class graph serializes")
    }
}

/// Breadth-first closure of `seed` under both moves.
pub fn rauzy_class(seed: &LabeledPermutation) -> Result<RauzyClassGraph, PermError> {
    rauzy_class_with_budget(seed, DEFAULT_VERTEX_BUDGET)
}

pub fn rauzy_class_with_budget(
    seed: &LabeledPermutation,
    budget: usize,
) -> Result<RauzyClassGraph, PermError> {
    explore(seed, budget, |_| true)
}

/// Closure of `seed` under the moves accepted by `allow`.
pub fn rauzy_subgraph(
    seed: &LabeledPermutation,
    allow: impl Fn(&RauzyEdge) -> bool,
) -> Result<RauzyClassGraph, PermError> {
    explore(seed, DEFAULT_VERTEX_BUDGET, allow)
}

fn explore(
    seed: &LabeledPermutation,
    budget: usize,
    allow: impl Fn(&RauzyEdge) -> bool,
) -> Result<RauzyClassGraph, PermError> {
    if !seed.is_irreducible() {
        return Err(PermError::Reducible(seed.to_string()));
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    let mut edges = Vec::new();
    seen.insert(seed.clone());
    queue.push_back(seed.clone());
    while let Some(pi) = queue.pop_front() {
        for side in Side::BOTH {
            let edge = rauzy_move(&pi, side)?;
            if !allow(&edge) {
                continue;
            }
            if seen.insert(edge.target.clone()) {
                if seen.len() > budget {
                    return Err(PermError::BudgetExceeded(budget));
                }
                queue.push_back(edge.target.clone());
            }
            edges.push(edge);
        }
    }
    Ok(RauzyClassGraph::from_parts(seen, edges))
}

/// The part of the hyperelliptic class reachable from the left hub while
/// symbol 1 never wins and symbols `d-1`, `d` are never compared.
#[derive(Debug, Clone)]
pub struct RestrictionSubgraph {
    pub d: usize,
    pub graph: RauzyClassGraph,
    /// Index of the left hub in `graph`.
    pub hub: usize,
}

impl RestrictionSubgraph {
    /// Removes the hub, which has one incoming and one outgoing edge, and
    /// joins those two edges. The merged edge keeps the label of the edge
    /// that entered the hub.
    pub fn collapsed(&self) -> RauzyClassGraph {
        let g = &self.graph;
        let incoming: Vec<&ClassEdge> = g.edges.iter().filter(|e| e.target == self.hub).collect();
        let outgoing: Vec<&ClassEdge> = g.edges.iter().filter(|e| e.source == self.hub).collect();
        assert_eq!(incoming.len(), 1, "hub has a single incoming edge");
        assert_eq!(outgoing.len(), 1, "hub has a single outgoing edge");
        let renumber = |i: usize| if i > self.hub { i - 1 } else { i };
        let mut edges: Vec<ClassEdge> = g
            .edges
            .iter()
            .filter(|e| e.source != self.hub && e.target != self.hub)
            .map(|e| ClassEdge { source: renumber(e.source), target: renumber(e.target), ..*e })
            .collect();
        edges.push(ClassEdge {
            source: renumber(incoming[0].source),
            target: renumber(outgoing[0].target),
            ..*incoming[0]
        });
        edges.sort_by_key(|e| (e.source, e.side, e.target));
        let vertices =
            g.vertices.iter().enumerate().filter(|(i, _)| *i != self.hub).map(|(_, v)| v.clone()).collect();
        RauzyClassGraph { vertices, edges }
    }
}

/// Whether an edge is admissible during restriction on the left-hand side.
pub fn is_lhs_restriction_move(d: usize, winner: Symbol, loser: Symbol) -> bool {
    let (a, b) = ((d - 1) as Symbol, d as Symbol);
    winner != 1 && winner != a && winner != b && loser != a && loser != b
}

pub fn restriction_subgraph(d: usize) -> Result<RestrictionSubgraph, PermError> {
    check_alphabet(d, 4)?;
    if d == 4 {
        return Err(PermError::DegenerateRestriction(d));
    }
    let hub = special_permutations(d)?.left;
    let graph = explore(&hub, DEFAULT_VERTEX_BUDGET, |e| is_lhs_restriction_move(d, e.winner, e.loser))?;
    let hub = graph.index_of(&hub).expect("seed is a vertex");
    Ok(RestrictionSubgraph { d, graph, hub })
}

/// Multiset of `(source, target)` pairs, used by graph comparisons.
pub fn adjacency_counts(g: &RauzyClassGraph) -> BTreeMap<(usize, usize), usize> {
    let mut m = BTreeMap::new();
    for e in &g.edges {
        *m.entry((e.source, e.target)).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(top: &[Symbol], bottom: &[Symbol]) -> LabeledPermutation {
        LabeledPermutation::new(top.to_vec(), bottom.to_vec()).unwrap()
    }

    #[test]
    fn hyperelliptic_rows() {
        assert_eq!(hyperelliptic_permutation(4).unwrap(), perm(&[1, 2, 3, 4], &[4, 3, 2, 1]));
        assert_eq!(hyperelliptic_permutation(2).unwrap(), perm(&[1, 2], &[2, 1]));
        assert_eq!(
            hyperelliptic_permutation(5).unwrap(),
            perm(&[1, 2, 3, 4, 5], &[5, 4, 3, 2, 1])
        );
        assert_eq!(hyperelliptic_permutation(1), Err(PermError::InvalidAlphabet(1)));
        assert_eq!(hyperelliptic_permutation(0), Err(PermError::InvalidAlphabet(0)));
    }

    #[test]
    fn special_rows() {
        let s4 = special_permutations(4).unwrap();
        assert_eq!(s4.left, perm(&[1, 3, 4, 2], &[4, 3, 2, 1]));
        assert_eq!(s4.right, perm(&[1, 2, 3, 4], &[4, 2, 1, 3]));
        let s5 = special_permutations(5).unwrap();
        assert_eq!(s5.pre_hyperelliptic, perm(&[1, 3, 4, 5, 2], &[5, 4, 3, 2, 1]));
        assert_eq!(special_permutations(3), Err(PermError::UnsupportedDimension(3, 4)));
    }

    #[test]
    fn bottom_wins_from_hyperelliptic() {
        let s = hyperelliptic_permutation(4).unwrap();
        let e = rauzy_move(&s, Side::BottomWins).unwrap();
        assert_eq!((e.winner, e.loser), (1, 4));
        assert_eq!(e.target, perm(&[1, 4, 2, 3], &[4, 3, 2, 1]));
    }

    #[test]
    fn two_bottom_wins_reach_left_hub() {
        for d in 4..=8 {
            let s = hyperelliptic_permutation(d).unwrap();
            let once = rauzy_move(&s, Side::BottomWins).unwrap().target;
            let twice = rauzy_move(&once, Side::BottomWins).unwrap();
            assert_eq!(twice.winner, 1);
            assert_eq!(twice.loser as usize, d - 1);
            assert_eq!(twice.target, special_permutations(d).unwrap().left);
        }
    }

    #[test]
    fn d2_is_a_single_vertex() {
        let s = hyperelliptic_permutation(2).unwrap();
        assert_eq!(rauzy_move(&s, Side::TopWins).unwrap().target, s);
        let g = rauzy_class(&s).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.source == 0 && e.target == 0));
    }

    #[test]
    fn reducible_inputs_are_rejected() {
        let r = perm(&[1, 2, 3], &[1, 3, 2]);
        assert!(!r.is_irreducible());
        assert!(matches!(rauzy_move(&r, Side::TopWins), Err(PermError::Reducible(_))));
        assert!(matches!(rauzy_class(&r), Err(PermError::Reducible(_))));
        assert!(!perm(&[2, 1, 3], &[1, 2, 3]).is_irreducible());
        assert!(perm(&[1, 2, 3], &[3, 2, 1]).is_irreducible());
    }

    #[test]
    fn bad_rows_are_rejected() {
        assert_eq!(
            LabeledPermutation::new(vec![1, 1, 2], vec![2, 1, 3]),
            Err(PermError::NotAPermutation(3))
        );
        assert_eq!(LabeledPermutation::new(vec![1, 2], vec![2, 1, 3]), Err(PermError::NotAPermutation(2)));
    }

    #[test]
    fn budget_overflow_is_reported() {
        let s = hyperelliptic_permutation(6).unwrap();
        assert_eq!(rauzy_class_with_budget(&s, 5), Err(PermError::BudgetExceeded(5)));
    }

    #[test]
    fn parse_round_trip() {
        let p = LabeledPermutation::parse("1 3 4 2 / 4,3,2,1").unwrap();
        assert_eq!(p, special_permutations(4).unwrap().left);
        assert!(LabeledPermutation::parse("1 2 3").is_err());
    }

    #[test]
    fn restriction_subgraph_is_degenerate_at_four() {
        assert_eq!(restriction_subgraph(4).unwrap_err(), PermError::DegenerateRestriction(4));
    }

    #[test]
    fn restriction_never_touches_the_last_two_symbols() {
        for d in 5..=8 {
            let r = restriction_subgraph(d).unwrap();
            for e in &r.graph.edges {
                assert!(e.winner as usize <= d - 2 && e.loser as usize <= d - 2);
                assert_ne!(e.winner, 1);
            }
        }
    }
}
