//! The skew form attached to a permutation, its invariance under the
//! cocycle, and singular-value diagnostics of cocycle matrices.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::matrix::{dot, rat_to_f64, IntMatrix, RatMatrix, VisitationMatrix};
use crate::perm::{LabeledPermutation, PermError};

#[derive(Debug, Error)]
pub enum SymplecticError {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("form ranks differ: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("matrix does not intertwine the two forms")]
    NotInvariant,
    #[error("singular value decomposition failed")]
    Decomposition,
    #[error("matrix is singular")]
    Singular,
}

/// `Omega_pi` with its image and kernel.
#[derive(Clone, Debug)]
pub struct SymplecticForm {
    pub matrix: IntMatrix,
    /// Orthonormal basis of the image, in floating point.
    pub image_basis: Vec<Vec<f64>>,
    /// Exact basis of the kernel.
    pub kernel_basis: Vec<Vec<BigRational>>,
    pub rank: usize,
}

impl SymplecticForm {
    /// `x^T Omega y`.
    pub fn pair(&self, x: &[BigRational], y: &[BigRational]) -> BigRational {
        let r = self.matrix.to_rational();
        dot(x, &r.mul_vec(y))
    }

    /// Pseudo-inverse, the inverse of the form restricted to its image.
    pub fn inverse_on_image(&self) -> RatMatrix {
        self.matrix.to_rational().pseudo_inverse()
    }
}

/// Entry `(a, b)` is `+1` when `a` precedes `b` on top and follows it on
/// bottom, `-1` in the reversed situation, `0` otherwise.
pub fn omega(pi: &LabeledPermutation) -> Result<SymplecticForm, SymplecticError> {
    if !pi.is_irreducible() {
        return Err(PermError::Reducible(pi.to_string()).into());
    }
    let d = pi.d();
    let mut m = IntMatrix::zeros(d, d);
    for a in 1..=d as u8 {
        for b in 1..=d as u8 {
            let top = pi.top_position(a) < pi.top_position(b);
            let bottom = pi.bottom_position(a) < pi.bottom_position(b);
            let v = match (top, bottom) {
                (true, false) if a != b => 1,
                (false, true) if a != b => -1,
                _ => 0,
            };
            m.set(a as usize - 1, b as usize - 1, v.into());
        }
    }
    let r = m.to_rational();
    let kernel_basis = r.nullspace();
    let rank = d - kernel_basis.len();
    let (_, pivots) = r.transpose().rref();
    let image: Vec<Vec<f64>> =
        pivots.iter().map(|&c| r.column(c).iter().map(rat_to_f64).collect()).collect();
    Ok(SymplecticForm { matrix: m, image_basis: gram_schmidt(&image), kernel_basis, rank })
}

fn gram_schmidt(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = DVector::from_vec(v.clone());
        for u in &out {
            w -= u * u.dot(&w);
        }
        let n = w.norm();
        if n > 1e-12 {
            out.push(w / n);
        }
    }
    out.into_iter().map(|v| v.iter().copied().collect()).collect()
}

/// Exact check of `M^T Omega_pi M = Omega_pi'`.
pub fn verify_invariance(
    m: &IntMatrix,
    pi: &LabeledPermutation,
    pi_prime: &LabeledPermutation,
) -> Result<bool, SymplecticError> {
    let a = omega(pi)?.matrix;
    let b = omega(pi_prime)?.matrix;
    Ok(m.transpose().mul(&a).mul(m) == b)
}

/// `M v` lies in `ker Omega_pi` for every `v` in `ker Omega_pi'`.
pub fn kernel_maps_into_kernel(
    m: &IntMatrix,
    pi: &LabeledPermutation,
    pi_prime: &LabeledPermutation,
) -> Result<bool, SymplecticError> {
    let target = omega(pi)?.matrix.to_rational();
    let source = omega(pi_prime)?;
    Ok(source.kernel_basis.iter().all(|v| target.mul_vec(&m.mul_rat_vec(v)).iter().all(Zero::is_zero)))
}

/// Singular values with input and output directions.
#[derive(Clone, Debug, Serialize)]
pub struct SingularData {
    /// Descending.
    pub values: Vec<f64>,
    /// Right singular vectors, `M v_i = s_i u_i`.
    pub input_dirs: Vec<Vec<f64>>,
    /// Left singular vectors.
    pub output_dirs: Vec<Vec<f64>>,
}

pub fn singular_data(m: &DMatrix<f64>) -> Result<SingularData, SymplecticError> {
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 10_000).ok_or(SymplecticError::Decomposition)?;
    let u = svd.u.ok_or(SymplecticError::Decomposition)?;
    let vt = svd.v_t.ok_or(SymplecticError::Decomposition)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut values = Vec::new();
    let mut input_dirs = Vec::new();
    let mut output_dirs = Vec::new();
    for i in order {
        let mut v: Vec<f64> = vt.row(i).iter().copied().collect();
        let mut w: Vec<f64> = u.column(i).iter().copied().collect();
        let first = v.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(1.0);
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            w.iter_mut().for_each(|x| *x = -*x);
        }
        values.push(svd.singular_values[i]);
        input_dirs.push(v);
        output_dirs.push(w);
    }
    Ok(SingularData { values, input_dirs, output_dirs })
}

/// Symplectic basis of a complement of the kernel: pairs `(e_i, f_i)` with
/// `w(e_i, f_i) = 1` and all other pairings zero.
pub fn darboux_basis(form: &SymplecticForm) -> Vec<(Vec<BigRational>, Vec<BigRational>)> {
    let d = form.matrix.rows();
    let mut pool: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            let mut e = vec![BigRational::zero(); d];
            e[i] = BigRational::one();
            e
        })
        .collect();
    let mut pairs = Vec::new();
    while pairs.len() * 2 < form.rank {
        let (ei, fi) = (0..pool.len())
            .flat_map(|i| (0..pool.len()).map(move |j| (i, j)))
            .find(|&(i, j)| !form.pair(&pool[i], &pool[j]).is_zero())
            .expect("form is non-degenerate on the remaining span");
        let e = pool[ei].clone();
        let w = form.pair(&e, &pool[fi]);
        let f: Vec<BigRational> = pool[fi].iter().map(|x| x / &w).collect();
        pool = pool
            .into_iter()
            .enumerate()
            .filter(|(k, _)| *k != ei && *k != fi)
            .map(|(_, v)| {
                let a = -form.pair(&v, &f);
                let b = form.pair(&v, &e);
                v.iter().zip(&e).zip(&f).map(|((x, ee), ff)| x + &a * ee + &b * ff).collect()
            })
            .collect();
        pairs.push((e, f));
    }
    pairs
}

/// Matrix of the map induced by `M` between the quotients by the kernels,
/// written in Darboux bases (`pi_prime` on the source, `pi` on the target).
/// It preserves the standard form exactly.
pub fn induced_symplectic_matrix(
    m: &IntMatrix,
    pi: &LabeledPermutation,
    pi_prime: &LabeledPermutation,
) -> Result<RatMatrix, SymplecticError> {
    let target = omega(pi)?;
    let source = omega(pi_prime)?;
    if target.rank != source.rank {
        return Err(SymplecticError::RankMismatch(target.rank, source.rank));
    }
    let tb = darboux_basis(&target);
    let sb = darboux_basis(&source);
    let coords = |v: &[BigRational]| -> Vec<BigRational> {
        let mut c = Vec::with_capacity(target.rank);
        for (_, f) in &tb {
            c.push(target.pair(v, f));
        }
        for (e, _) in &tb {
            c.push(-target.pair(v, e));
        }
        c
    };
    let mut cols = Vec::with_capacity(source.rank);
    for (e, _) in &sb {
        cols.push(coords(&m.mul_rat_vec(e)));
    }
    for (_, f) in &sb {
        cols.push(coords(&m.mul_rat_vec(f)));
    }
    Ok(RatMatrix::from_columns(cols))
}

/// Standard form `[[0, I], [-I, 0]]` of size `2g`.
pub fn standard_form(g: usize) -> RatMatrix {
    let mut j = RatMatrix::zeros(2 * g, 2 * g);
    for i in 0..g {
        j.set(i, g + i, BigRational::one());
        j.set(g + i, i, -BigRational::one());
    }
    j
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingReport {
    /// Singular values of the restricted map, descending.
    pub values: Vec<f64>,
    /// `(i, j)` index pairs, `values[i] * values[j]` closest to one.
    pub pairs: Vec<(usize, usize)>,
    /// `max |a_i a_j - 1|` over the pairs.
    pub defect: f64,
    pub rank: usize,
}

/// Pairs the singular values of the cocycle restricted to the non-degenerate
/// part of the form.
///
/// Large values come from the induced matrix `S`, small ones as reciprocals
/// of the large values of `S^{-1}`, so neither half suffers from the
/// cancellation that hides tiny singular values of a badly conditioned matrix.
pub fn reciprocal_pairing(
    m: &IntMatrix,
    pi: &LabeledPermutation,
    pi_prime: &LabeledPermutation,
) -> Result<PairingReport, SymplecticError> {
    if !verify_invariance(m, pi, pi_prime)? {
        return Err(SymplecticError::NotInvariant);
    }
    let s = induced_symplectic_matrix(m, pi, pi_prime)?;
    let rank = s.rows();
    if rank == 0 {
        return Ok(PairingReport { values: Vec::new(), pairs: Vec::new(), defect: 0.0, rank });
    }
    let s_inv = s.inverse().ok_or(SymplecticError::Singular)?;
    let big = singular_data(&s.to_f64())?.values;
    let inv = singular_data(&s_inv.to_f64())?.values;
    let g = rank / 2;
    let mut values: Vec<f64> = big[..g].to_vec();
    values.extend(inv[..g].iter().rev().map(|x| 1.0 / x));
    values.sort_by(|a, b| b.total_cmp(a));

    let mut used = vec![false; rank];
    let mut pairs = Vec::new();
    let mut defect: f64 = 0.0;
    for i in 0..rank {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (j, err) = (0..rank)
            .filter(|&j| !used[j])
            .map(|j| (j, (values[i] * values[j] - 1.0).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("even rank");
        used[j] = true;
        pairs.push((i, j));
        defect = defect.max(err);
    }
    Ok(PairingReport { values, pairs, defect, rank })
}

/// Angle between two vectors, in `[0, pi]`.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    c.clamp(-1.0, 1.0).acos()
}

/// Angle between lines, in `[0, pi/2]`.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let t = angle(a, b);
    t.min(std::f64::consts::PI - t)
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleReport {
    /// Angle between the top singular direction of `M^T` and `C_d(M)`.
    pub top_to_last_column: f64,
    /// Angle between the second singular direction of `M^T` and the part of
    /// `C_1(M)` orthogonal to the top one.
    pub second_to_first_column: f64,
    /// Pairwise column angles.
    pub column_angles: Vec<Vec<f64>>,
}

pub fn angle_report(m: &IntMatrix) -> Result<AngleReport, SymplecticError> {
    let d = m.cols();
    let cols = m.normalized_columns_f64();
    let sd = singular_data(&m.to_f64().transpose())?;
    let w = &sd.input_dirs[0];
    let w2 = &sd.input_dirs[1.min(d - 1)];
    let c1 = &cols[0];
    let along: f64 = c1.iter().zip(w).map(|(x, y)| x * y).sum();
    let proj: Vec<f64> = c1.iter().zip(w).map(|(x, y)| x - along * y).collect();
    let column_angles =
        (0..d).map(|i| (0..d).map(|j| if i == j { 0.0 } else { angle(&cols[i], &cols[j]) }).collect()).collect();
    Ok(AngleReport {
        top_to_last_column: line_angle(w, &cols[d - 1]),
        second_to_first_column: line_angle(w2, &proj),
        column_angles,
    })
}

/// The line spanned by `e_{d-1} - e_d` is mapped into itself.
pub fn preserves_last_difference(m: &VisitationMatrix) -> bool {
    let d = m.d();
    let mut v = vec![BigRational::zero(); d];
    v[d - 2] = BigRational::one();
    v[d - 1] = -BigRational::one();
    let image = m.mul_rat_vec(&v);
    image.iter().take(d - 2).all(Zero::is_zero) && (&image[d - 2] + &image[d - 1]).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{hyperelliptic_permutation, rauzy_move, Side};

    #[test]
    fn hyperelliptic_form() {
        let f = omega(&hyperelliptic_permutation(4).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = (i < j) as i64 - (i > j) as i64;
                assert_eq!(*f.matrix.get(i, j), want.into());
            }
        }
        assert_eq!(f.rank, 4);
        let f2 = omega(&hyperelliptic_permutation(2).unwrap()).unwrap();
        assert_eq!(f2.matrix, IntMatrix::from_rows(&[vec![0, 1], vec![-1, 0]]));
    }

    #[test]
    fn odd_alphabet_has_kernel() {
        let f = omega(&hyperelliptic_permutation(5).unwrap()).unwrap();
        assert_eq!(f.rank, 4);
        assert_eq!(f.kernel_basis.len(), 1);
        let k = &f.kernel_basis[0];
        let first = k[0].clone();
        let pattern: Vec<BigRational> = k.iter().map(|x| x / &first).collect();
        let want: Vec<BigRational> = [1, -1, 1, -1, 1].iter().map(|&x| BigRational::from_integer(x.into())).collect();
        assert_eq!(pattern, want);
    }

    #[test]
    fn single_step_invariance() {
        let s = hyperelliptic_permutation(4).unwrap();
        for side in Side::BOTH {
            let e = rauzy_move(&s, side).unwrap();
            let m = VisitationMatrix::elementary(4, e.winner, e.loser);
            assert!(verify_invariance(&m, &s, &e.target).unwrap());
        }
    }

    #[test]
    fn golden_singular_values() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let sd = singular_data(&m).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sd.values[0] - phi).abs() < 1e-12);
        assert!((sd.values[1] - 1.0 / phi).abs() < 1e-12);
        assert!((sd.values[0] * sd.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn darboux_basis_is_symplectic() {
        for pi in [hyperelliptic_permutation(4).unwrap(), hyperelliptic_permutation(5).unwrap()] {
            let f = omega(&pi).unwrap();
            let b = darboux_basis(&f);
            for (i, (ei, fi)) in b.iter().enumerate() {
                for (j, (ej, fj)) in b.iter().enumerate() {
                    assert!(f.pair(ei, ej).is_zero());
                    assert!(f.pair(fi, fj).is_zero());
                    assert_eq!(f.pair(ei, fj), BigRational::from_integer(((i == j) as i64).into()));
                }
            }
        }
    }

    #[test]
    fn identity_pairing() {
        let s = hyperelliptic_permutation(4).unwrap();
        let r = reciprocal_pairing(&IntMatrix::identity(4), &s, &s).unwrap();
        assert!(r.defect < 1e-12);
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn identity_angles() {
        let r = angle_report(&IntMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((r.column_angles[i][j] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
                }
            }
        }
    }
}
