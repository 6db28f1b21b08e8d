//! Lines in a fixed direction reaching the first face of a simplex family.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::matrix::{rat_to_f64, IntMatrix, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IlluminationError {
    #[error("face is degenerate: its vertices span an affine space of dimension {0}")]
    DegenerateFace(usize),
    #[error("direction is zero")]
    ZeroDirection,
    #[error("family is empty")]
    Empty,
}

/// Simplices sharing the role of their first vertex; the first face of the
/// family is the convex hull of every vertex except the first ones.
#[derive(Clone, Debug)]
pub struct IlluminationFamily {
    /// Vertex lists; vertex `i` of each simplex is a point of `Delta`.
    pub simplices: Vec<Vec<Vec<BigRational>>>,
}

impl IlluminationFamily {
    /// Simplex `M Delta` for each matrix, vertices `C_i / |C_i|`.
    pub fn from_matrices(ms: &[IntMatrix]) -> Self {
        let simplices = ms
            .iter()
            .map(|m| {
                (0..m.cols())
                    .map(|j| {
                        let s = BigRational::from_integer(m.column_sum(j));
                        (0..m.rows()).map(|i| BigRational::from_integer(m.get(i, j).clone()) / &s).collect()
                    })
                    .collect()
            })
            .collect();
        Self { simplices }
    }

    pub fn d(&self) -> usize {
        self.simplices.first().map_or(0, |s| s.len())
    }

    /// Vertices spanning the first face, without repetitions.
    pub fn face_vertices(&self) -> Vec<Vec<BigRational>> {
        let mut out: Vec<Vec<BigRational>> = Vec::new();
        for s in &self.simplices {
            for v in &s[1..] {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k.min(n), &mut cur, &mut out);
    out
}

fn face_dimension(face: &[Vec<BigRational>]) -> usize {
    let base = &face[0];
    let diffs: Vec<Vec<BigRational>> =
        face[1..].iter().map(|v| v.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    if diffs.is_empty() {
        0
    } else {
        RatMatrix::from_rows(diffs).rank()
    }
}

/// Whether the line through `y` in direction `phi` meets the first face of
/// the family. Exact.
pub fn illuminated(
    y: &[BigRational],
    family: &IlluminationFamily,
    phi: &[BigRational],
) -> Result<bool, IlluminationError> {
    if family.simplices.is_empty() {
        return Err(IlluminationError::Empty);
    }
    if phi.iter().all(Zero::is_zero) {
        return Err(IlluminationError::ZeroDirection);
    }
    let d = y.len();
    let face = family.face_vertices();
    let dim = face_dimension(&face);
    if dim + 2 < d {
        return Err(IlluminationError::DegenerateFace(dim));
    }
    for subset in subsets(face.len(), d - 1) {
        if line_meets_hull(y, phi, &subset.iter().map(|&i| &face[i]).collect::<Vec<_>>()) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Solves `sum l_j v_j - t phi = y`, `sum l_j = 1`, and asks for `l >= 0`.
fn line_meets_hull(y: &[BigRational], phi: &[BigRational], verts: &[&Vec<BigRational>]) -> bool {
    let d = y.len();
    let k = verts.len();
    let mut rows = Vec::with_capacity(d + 1);
    for i in 0..d {
        let mut row: Vec<BigRational> = verts.iter().map(|v| v[i].clone()).collect();
        row.push(-phi[i].clone());
        row.push(y[i].clone());
        rows.push(row);
    }
    let mut sum_row = vec![BigRational::one(); k];
    sum_row.push(BigRational::zero());
    sum_row.push(BigRational::one());
    rows.push(sum_row);
    let (r, pivots) = RatMatrix::from_rows(rows).rref();
    let n = k + 1;
    if pivots.contains(&n) {
        return false;
    }
    // particular solution with free variables at zero, plus null directions
    let mut particular = vec![BigRational::zero(); n];
    for (row, &p) in pivots.iter().enumerate() {
        particular[p] = r.get(row, n).clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    match free.len() {
        0 => particular[..k].iter().all(|x| !x.is_negative()),
        1 => {
            let f = free[0];
            let mut dir = vec![BigRational::zero(); n];
            dir[f] = BigRational::one();
            for (row, &p) in pivots.iter().enumerate() {
                dir[p] = -r.get(row, f).clone();
            }
            // need particular + s dir >= 0 on the first k entries for some s
            let mut lo: Option<BigRational> = None;
            let mut hi: Option<BigRational> = None;
            for j in 0..k {
                let (a, b) = (&particular[j], &dir[j]);
                if b.is_zero() {
                    if a.is_negative() {
                        return false;
                    }
                } else {
                    let s = -a / b;
                    if b.is_positive() {
                        lo = Some(lo.map_or(s.clone(), |l: BigRational| l.max(s)));
                    } else {
                        hi = Some(hi.map_or(s.clone(), |h: BigRational| h.min(s)));
                    }
                }
            }
            match (lo, hi) {
                (Some(l), Some(h)) => l <= h,
                _ => true,
            }
        }
        _ => false,
    }
}

/// Floating-point variant of `illuminated` for Monte Carlo use.
pub fn illuminated_f64(y: &[f64], face: &[Vec<f64>], phi: &[f64]) -> bool {
    let d = y.len();
    for subset in subsets(face.len(), d - 1) {
        let k = subset.len();
        // least squares on the d + 1 equations; consistent systems have zero residual
        let a = DMatrix::from_fn(d + 1, k + 1, |i, j| {
            if i < d {
                if j < k {
                    face[subset[j]][i]
                } else {
                    -phi[i]
                }
            } else if j < k {
                1.0
            } else {
                0.0
            }
        });
        let b = DVector::from_fn(d + 1, |i, _| if i < d { y[i] } else { 1.0 });
        let svd = a.clone().svd(true, true);
        let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if smin < 1e-12 {
            continue;
        }
        let Ok(x) = svd.solve(&b, 1e-14) else { continue };
        let residual = (&a * &x - &b).norm();
        if residual < 1e-10 && x.iter().take(k).all(|&l| l >= -1e-12) {
            return true;
        }
    }
    false
}

/// Converts exact face vertices for `illuminated_f64`.
pub fn face_vertices_f64(family: &IlluminationFamily) -> Vec<Vec<f64>> {
    family.face_vertices().iter().map(|v| v.iter().map(rat_to_f64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rat;

    fn identity_family() -> IlluminationFamily {
        IlluminationFamily::from_matrices(&[IntMatrix::identity(4)])
    }

    #[test]
    fn point_on_face() {
        let y = vec![rat(0, 1), rat(1, 2), rat(1, 4), rat(1, 4)];
        let phi = vec![rat(1, 1), rat(-1, 1), rat(0, 1), rat(0, 1)];
        assert!(illuminated(&y, &identity_family(), &phi).unwrap());
    }

    #[test]
    fn parallel_direction_misses() {
        let y = vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)];
        let phi = vec![rat(0, 1), rat(1, 1), rat(-1, 1), rat(0, 1)];
        assert!(!illuminated(&y, &identity_family(), &phi).unwrap());
    }

    #[test]
    fn interior_point_reaches_face() {
        let y = vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)];
        let phi = vec![rat(1, 1), rat(-1, 1), rat(0, 1), rat(0, 1)];
        assert!(illuminated(&y, &identity_family(), &phi).unwrap());
        let neg: Vec<BigRational> = phi.iter().map(|x| -x.clone()).collect();
        assert!(illuminated(&y, &identity_family(), &neg).unwrap());
        let face = face_vertices_f64(&identity_family());
        assert!(illuminated_f64(&[0.5, 0.25, 0.125, 0.125], &face, &[1.0, -1.0, 0.0, 0.0]));
        assert!(!illuminated_f64(&[0.5, 0.25, 0.125, 0.125], &face, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn zero_direction_rejected() {
        let y = vec![rat(1, 4); 4];
        let phi = vec![rat(0, 1); 4];
        assert_eq!(illuminated(&y, &identity_family(), &phi), Err(IlluminationError::ZeroDirection));
    }
}
