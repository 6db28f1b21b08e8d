//! Projective action of non-negative matrices on the standard simplex.
//!
//! `Delta` is the set of non-negative vectors with coordinate sum one and a
//! matrix `M` acts by `z -> M z / |M z|`. Volumes are always reported
//! relative to `Delta` itself, so the dimension constant never appears.

mod concavity;
mod illumination;
mod plane;

pub use concavity::{
    ball_section_fraction, concavity_test, random_simplex, Body, ConcavityConfig, ConcavityReport,
};
pub use illumination::{
    face_vertices_f64, illuminated, illuminated_f64, IlluminationError, IlluminationFamily,
};
pub use plane::{
    plane_family, section, section_in_chart, Chart, Plane, PlaneFamily, SectionPolygon,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::matrix::{big_to_f64, IntMatrix, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is singular; its simplex is degenerate")]
    Singular,
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("point outside the admissible domain: {0}")]
    Domain(String),
}

fn product(xs: impl IntoIterator<Item = BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |a, b| a * b)
}

/// `lambda(M Delta) / lambda(Delta) = |det M| / prod |C_i(M)|`.
pub fn simplex_volume_fraction(m: &IntMatrix) -> Result<BigRational, GeometryError> {
    let det = m.det();
    if det.is_zero() {
        return Err(GeometryError::Singular);
    }
    Ok(BigRational::new(det.abs(), product(m.column_sums())))
}

/// `lambda(M1 Delta) / lambda(M2 Delta)`.
pub fn simplex_volume_ratio(m1: &IntMatrix, m2: &IntMatrix) -> Result<BigRational, GeometryError> {
    Ok(simplex_volume_fraction(m1)? / simplex_volume_fraction(m2)?)
}

/// Volume relative to `Delta` of the simplex with the given vertices, each a
/// point of `Delta`: the absolute determinant of the vertex matrix.
pub fn vertex_simplex_fraction(vertices: &[Vec<BigRational>]) -> BigRational {
    RatMatrix::from_columns(vertices.to_vec()).det().abs()
}

/// Ratio of the volumes of the faces spanned by the columns in `face` of
/// `M A1` and `M A2`, from column sums alone.
pub fn face_volume_ratio(
    m: &IntMatrix,
    a1: &IntMatrix,
    a2: &IntMatrix,
    face: &[usize],
) -> Result<BigRational, GeometryError> {
    let p1 = m.mul(a1);
    let p2 = m.mul(a2);
    let sums = |p: &IntMatrix| product(face.iter().map(|&i| p.column_sum(i)));
    let (s1, s2) = (sums(&p1), sums(&p2));
    if s1.is_zero() || s2.is_zero() {
        return Err(GeometryError::Singular);
    }
    Ok(BigRational::new(s2, s1))
}

/// `det M / (sum_i |C_i| z_i)^d`.
pub fn jacobian(m: &IntMatrix, z: &[f64]) -> f64 {
    let d = m.cols();
    let sums = m.column_sums();
    let s: f64 = sums.iter().zip(z).map(|(c, x)| big_to_f64(c) * x).sum();
    big_to_f64(&m.det()).abs() / s.powi(d as i32)
}

pub fn jacobian_exact(m: &IntMatrix, z: &[BigRational]) -> BigRational {
    let d = m.cols();
    let s: BigRational = m.column_sums().into_iter().zip(z).map(|(c, x)| BigRational::from_integer(c) * x).sum();
    BigRational::from_integer(m.det().abs()) / num_traits::pow(s, d)
}

/// `(sum_j u_{i_j} |C_{i_j}|)^{-k}` for a point on the face spanned by the
/// columns in `face`. Only ratios of this quantity are meaningful.
pub fn face_jacobian(m: &IntMatrix, u: &[f64], face: &[usize]) -> Result<f64, GeometryError> {
    let tol = 1e-12;
    let sum: f64 = u.iter().sum();
    if u.iter().any(|&x| x < -tol) || (sum - 1.0).abs() > 1e-9 {
        return Err(GeometryError::Domain("point is not in the simplex".into()));
    }
    for (i, &x) in u.iter().enumerate() {
        if !face.contains(&i) && x.abs() > tol {
            return Err(GeometryError::Domain(format!("coordinate {} is off the face", i + 1)));
        }
    }
    let sums = m.column_sums();
    let s: f64 = face.iter().map(|&i| u[i] * big_to_f64(&sums[i])).sum();
    Ok(s.powi(-(face.len() as i32)))
}

/// `(1 / lambda(Delta)) * integral over W of the Jacobian`, for `W` the
/// simplex spanned by `vertices` inside `Delta`. Exact.
pub fn jacobian_integral_fraction(m: &IntMatrix, vertices: &[Vec<BigRational>]) -> BigRational {
    let sums: Vec<BigRational> = m.column_sums().into_iter().map(BigRational::from_integer).collect();
    let mut value = vertex_simplex_fraction(vertices) * BigRational::from_integer(m.det().abs());
    for w in vertices {
        let s: BigRational = sums.iter().zip(w).map(|(c, x)| c * x).sum();
        value /= s;
    }
    value
}

/// `M z / |M z|`.
pub fn projective_apply(m: &IntMatrix, z: &[BigRational]) -> Vec<BigRational> {
    let y = m.mul_rat_vec(z);
    let s: BigRational = y.iter().sum();
    y.into_iter().map(|x| x / &s).collect()
}

/// Preimage of `y` under the projective action: `M x = t y`, normalized.
pub fn projective_preimage(m: &IntMatrix, y: &[BigRational]) -> Option<Vec<BigRational>> {
    let x = m.to_rational().solve(y)?;
    let s: BigRational = x.iter().sum();
    if s.is_zero() {
        return None;
    }
    Some(x.into_iter().map(|v| v / &s).collect())
}

/// Uniform point of `Delta` from normalized exponential spacings.
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= s);
    e
}

/// Uniform point of `M Delta` together with its projective preimage.
///
/// A uniform point of `M Delta` has uniform barycentric coordinates `w` with
/// respect to the vertices `C_i / |C_i|`, and its preimage is the
/// normalization of `w_i / |C_i|`; no linear solve is needed.
pub fn sample_image<R: Rng + ?Sized>(
    rng: &mut R,
    vertices: &[Vec<f64>],
    column_sums: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let d = column_sums.len();
    let w = sample_simplex(rng, d);
    let mut y = vec![0.0; vertices[0].len()];
    for (wi, v) in w.iter().zip(vertices) {
        for (yk, vk) in y.iter_mut().zip(v) {
            *yk += wi * vk;
        }
    }
    let mut x: Vec<f64> = w.iter().zip(column_sums).map(|(wi, c)| wi / c).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    (y, x)
}

/// Barycentric coordinates of `z` with respect to the simplex `vertices`,
/// all points of `Delta`.
pub fn barycentric(vertices: &[Vec<f64>], z: &[f64]) -> Option<Vec<f64>> {
    let d = vertices.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| vertices[j][i]);
    m.lu().solve(&nalgebra::DVector::from_column_slice(z)).map(|v| v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{rat, VisitationMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_volume_and_jacobian() {
        let i3 = IntMatrix::identity(3);
        assert_eq!(simplex_volume_ratio(&i3, &i3).unwrap(), BigRational::one());
        assert!((jacobian(&i3, &[0.2, 0.3, 0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_segment() {
        let m = IntMatrix::from_rows(&[vec![1, 0], vec![1, 1]]);
        assert_eq!(simplex_volume_fraction(&m).unwrap(), rat(1, 2));
        let m = IntMatrix::from_columns(&[vec![1, 1], vec![0, 1]]);
        assert!((jacobian(&m, &[1.0, 0.0]) - 0.25).abs() < 1e-15);
        assert_eq!(jacobian_exact(&m, &[rat(1, 1), rat(0, 1)]), rat(1, 4));
    }

    #[test]
    fn singular_is_rejected() {
        let m = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        assert_eq!(simplex_volume_fraction(&m), Err(GeometryError::Singular));
    }

    #[test]
    fn whole_simplex_integral() {
        let m = VisitationMatrix::elementary(3, 1, 2).then(&VisitationMatrix::elementary(3, 3, 1));
        let verts: Vec<Vec<BigRational>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { rat(1, 1) } else { rat(0, 1) }).collect())
            .collect();
        assert_eq!(jacobian_integral_fraction(&m, &verts), simplex_volume_fraction(&m).unwrap());
    }

    #[test]
    fn preimage_inverts_action() {
        let m = VisitationMatrix::elementary(3, 2, 3).then(&VisitationMatrix::elementary(3, 1, 2));
        let z = vec![rat(1, 2), rat(1, 3), rat(1, 6)];
        let y = projective_apply(&m, &z);
        assert_eq!(projective_preimage(&m, &y).unwrap(), z);
    }

    #[test]
    fn simplex_samples_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = sample_simplex(&mut rng, 5);
            assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(z.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn face_jacobian_domain() {
        let m = IntMatrix::identity(4);
        assert!(face_jacobian(&m, &[0.5, 0.5, 0.0, 0.0], &[0, 1]).is_ok());
        assert!(face_jacobian(&m, &[0.5, 0.25, 0.25, 0.0], &[0, 1]).is_err());
        let a = face_jacobian(&m, &[0.5, 0.5, 0.0, 0.0], &[0, 1]).unwrap();
        let b = face_jacobian(&m, &[0.9, 0.1, 0.0, 0.0], &[0, 1]).unwrap();
        assert!((a / b - 1.0).abs() < 1e-15);
    }
}
