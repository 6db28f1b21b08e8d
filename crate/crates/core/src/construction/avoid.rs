//! Paths whose simplex stays close to one vertex of `Delta`.
//!
//! From `pi_L` only the symbols `1..d-2` win, so the last two columns stay
//! `e_{d-1}`, `e_d` and the face spanned by the first `d-2` columns is the
//! part that moves. The paths below push that whole face towards `e_i`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::phases::{beat_once, validate, Phase, PhaseContext, PhaseError, PhasePath};
use crate::matrix::big_ratio_f64;
use crate::perm::Symbol;

#[derive(Debug, Error)]
pub enum AvoidError {
    #[error("target vertex {i} is outside 1..={max}")]
    Target { i: usize, max: usize },
    #[error("face reaches radius {radius:.4} around e_{i}, above the requested {eps}")]
    Calibration { i: usize, radius: f64, eps: f64 },
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvoidingPath {
    pub i: usize,
    pub repetitions: usize,
    pub path: PhasePath,
    /// Normalized columns `1..d-2` of the path matrix.
    pub face: Vec<Vec<f64>>,
    /// Largest distance from a face vertex to `e_i`.
    pub radius: f64,
    /// Smallest coordinate `i` over the face vertices, exact up to rounding of
    /// the final division.
    pub min_target_coordinate: f64,
}

fn block(d: Symbol, i: Symbol, reps: usize, seq: &mut Vec<(Symbol, Symbol)>) {
    let top = d - 2;
    if i == top {
        for _ in 0..reps {
            seq.extend((1..top).map(|j| (top, j)));
        }
    } else {
        seq.extend((1..i).map(|j| (top, j)));
        for _ in 0..reps {
            seq.extend((i + 1..=top).rev().map(|j| (i, j)));
        }
        seq.extend((i..top).map(|j| (top, j)));
    }
}

/// Builds the path for target vertex `i` (1-based, at most `d-2`).
///
/// For `i = 1` this is `1` beating `d-2, ..., 2`. For larger `i` the block
/// "`d-2` beats `1..i-1`, then `reps` sweeps of `i` beating `d-2..i+1`, then
/// `d-2` beats `i..d-3`" brings the path back to `pi_L`; it is run twice,
/// followed by the `i = 1` tail into `pi_s`. A single block leaves the
/// columns `1..i-1` at a fixed distance from `e_i` whatever `reps` is.
pub fn avoiding_path(ctx: &PhaseContext, i: usize, reps: usize) -> Result<AvoidingPath, AvoidError> {
    let d = ctx.d;
    if i == 0 || i > d - 2 {
        return Err(AvoidError::Target { i, max: d - 2 });
    }
    let (ds, is) = (d as Symbol, i as Symbol);
    let mut seq = Vec::new();
    if i > 1 {
        for _ in 0..2 {
            block(ds, is, reps, &mut seq);
        }
    }
    seq.extend((2..=ds - 2).rev().map(|j| (1, j)));
    let mut path = PhasePath::new(Phase::Avoiding, ctx.left.clone());
    for (w, l) in seq {
        beat_once(&mut path, w, l)?;
    }
    validate(ctx, &path)?;
    let m = path.matrix.as_matrix();
    let face: Vec<Vec<f64>> = (0..d - 2)
        .map(|j| {
            let s = m.column_sum(j);
            (0..d).map(|r| big_ratio_f64(m.get(r, j), &s)).collect()
        })
        .collect();
    let radius = face
        .iter()
        .map(|v| v.iter().enumerate().map(|(r, x)| if r + 1 == i { (x - 1.0).powi(2) } else { x * x }).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let min_target_coordinate = face.iter().map(|v| v[i - 1]).fold(f64::INFINITY, f64::min);
    Ok(AvoidingPath { i, repetitions: reps, path, face, radius, min_target_coordinate })
}

/// `avoiding_path` with `reps = ceil(4 / eps)`, failing when the face is not
/// inside the ball of radius `eps` about `e_i`. For `i = 1` the requirement is
/// instead that every face vertex has first coordinate at least `1/2`.
pub fn hyperplane_avoiding_path(ctx: &PhaseContext, i: usize, eps: f64) -> Result<AvoidingPath, AvoidError> {
    let reps = (4.0 / eps).ceil() as usize;
    let out = avoiding_path(ctx, i, reps)?;
    let ok = if i == 1 { face_first_coordinate_at_least_half(&out) } else { out.radius <= eps };
    if !ok {
        return Err(AvoidError::Calibration { i, radius: out.radius, eps });
    }
    Ok(out)
}

/// Exact check: `2 * m_{1j} >= |C_j|` for every face column.
pub fn face_first_coordinate_at_least_half(p: &AvoidingPath) -> bool {
    let m = p.path.matrix.as_matrix();
    (0..m.cols() - 2).all(|j| m.get(0, j) * 2 >= m.column_sum(j))
}
