//! Parallel 2-planes inside the slices `Delta_c` and their sections with
//! projective simplices.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::GeometryError;
use crate::matrix::{dot, format_rational, rat_to_f64, IntMatrix, RatMatrix};
use crate::planar::Polygon;
use crate::symplectic::SymplecticForm;

/// Directions `u`, `v` and the translates of `span(u, v)` that stay inside
/// some `Delta_c`.
#[derive(Clone, Debug)]
pub struct PlaneFamily {
    pub d: usize,
    pub u: Vec<BigRational>,
    pub v: Vec<BigRational>,
    /// Basis of the directions inside `Delta_c` orthogonal to `u` and `v`;
    /// together with `c` these parametrize the family.
    pub offset_basis: Vec<Vec<BigRational>>,
}

/// One member of a `PlaneFamily`.
#[derive(Clone, Debug)]
pub struct Plane {
    pub c: BigRational,
    pub origin: Vec<BigRational>,
    pub u: Vec<BigRational>,
    pub v: Vec<BigRational>,
}

fn slice_constraints(d: usize) -> Vec<Vec<BigRational>> {
    let ones = vec![BigRational::one(); d];
    let mut last = vec![BigRational::zero(); d];
    last[d - 2] = BigRational::one();
    last[d - 1] = BigRational::one();
    vec![ones, last]
}

/// Orthogonal projection of `w` onto the common kernel of `rows`.
fn project_onto_kernel(rows: &[Vec<BigRational>], w: &[BigRational]) -> Vec<BigRational> {
    let a = RatMatrix::from_rows(rows.to_vec());
    let (r, pivots) = a.rref();
    if pivots.is_empty() {
        return w.to_vec();
    }
    let basis = RatMatrix::from_rows((0..pivots.len()).map(|i| r.row(i)).collect());
    let gram = basis.mul(&basis.transpose());
    let coeff = gram.solve(&basis.mul_vec(w)).expect("independent rows");
    let correction = basis.transpose().mul_vec(&coeff);
    w.iter().zip(correction).map(|(x, c)| x - c).collect()
}

/// The family of planes parallel to `span(u, v)` where `u` is the projection
/// of `Omega^+ C_1(A1' B1)` onto the directions of `Delta_c` orthogonal to
/// `Omega^+ C_d(A1' B1)`, and `v` is defined with the two columns swapped.
pub fn plane_family(
    a1_prime: &IntMatrix,
    b1: &IntMatrix,
    form: &SymplecticForm,
) -> Result<PlaneFamily, GeometryError> {
    let d = a1_prime.rows();
    if d < 4 {
        return Err(GeometryError::Degenerate(format!("plane family needs d >= 4, got {d}")));
    }
    let p = a1_prime.mul(b1).to_rational();
    let pinv = form.inverse_on_image();
    let g1 = pinv.mul_vec(&p.column(0));
    let gd = pinv.mul_vec(&p.column(d - 1));
    let mut rows_u = slice_constraints(d);
    rows_u.push(gd.clone());
    let mut rows_v = slice_constraints(d);
    rows_v.push(g1.clone());
    let u = project_onto_kernel(&rows_u, &g1);
    let v = project_onto_kernel(&rows_v, &gd);
    family_from_directions(d, u, v)
}

/// Family from explicit directions, which must lie in the slice directions.
pub fn family_from_directions(
    d: usize,
    u: Vec<BigRational>,
    v: Vec<BigRational>,
) -> Result<PlaneFamily, GeometryError> {
    for row in slice_constraints(d) {
        if !dot(&row, &u).is_zero() || !dot(&row, &v).is_zero() {
            return Err(GeometryError::Degenerate("direction leaves the slice".into()));
        }
    }
    if RatMatrix::from_rows(vec![u.clone(), v.clone()]).rank() < 2 {
        return Err(GeometryError::Degenerate("plane directions are dependent".into()));
    }
    let mut rows = slice_constraints(d);
    rows.push(u.clone());
    rows.push(v.clone());
    let offset_basis = RatMatrix::from_rows(rows).nullspace();
    Ok(PlaneFamily { d, u, v, offset_basis })
}

impl PlaneFamily {
    /// The member through `(1-c)/(d-2), ..., c/2, c/2` shifted by
    /// `sum t_j offset_basis[j]`.
    pub fn plane(&self, c: &BigRational, t: &[BigRational]) -> Plane {
        let d = self.d;
        let head = (BigRational::one() - c) / BigRational::from_integer((d as i64 - 2).into());
        let half = c / BigRational::from_integer(2.into());
        let mut origin: Vec<BigRational> = (0..d).map(|i| if i < d - 2 { head.clone() } else { half.clone() }).collect();
        for (tj, nj) in t.iter().zip(&self.offset_basis) {
            for (o, n) in origin.iter_mut().zip(nj) {
                *o += tj * n;
            }
        }
        Plane { c: c.clone(), origin, u: self.u.clone(), v: self.v.clone() }
    }

    /// The member through a given point.
    pub fn plane_through(&self, point: &[BigRational]) -> Plane {
        let d = self.d;
        Plane {
            c: &point[d - 2] + &point[d - 1],
            origin: point.to_vec(),
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    pub fn u_f64(&self) -> Vec<f64> {
        self.u.iter().map(rat_to_f64).collect()
    }

    pub fn v_f64(&self) -> Vec<f64> {
        self.v.iter().map(rat_to_f64).collect()
    }

    pub fn to_record(&self) -> PlaneFamilyRecord {
        let fmt = |v: &[BigRational]| v.iter().map(format_rational).collect();
        PlaneFamilyRecord {
            d: self.d,
            u: fmt(&self.u),
            v: fmt(&self.v),
            offset_basis: self.offset_basis.iter().map(|b| fmt(b)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneFamilyRecord {
    pub d: usize,
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub offset_basis: Vec<Vec<String>>,
}

/// Orthonormal 2-D coordinates on a plane: `origin + x e1 + y e2`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub origin: Vec<BigRational>,
    pub u: Vec<BigRational>,
    pub v: Vec<BigRational>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    // alpha u + beta v = x e1 + y e2 with x = nu alpha + uv beta, y = nw beta
    nu: f64,
    uv: f64,
    nw: f64,
}

impl Chart {
    pub fn new(plane: &Plane) -> Self {
        Self::with_origin(plane, plane.origin.clone())
    }

    /// Chart whose origin is the point of `plane` closest to the barycenter
    /// of `M Delta`; keeps coordinates small when the simplex is tiny.
    pub fn centered(plane: &Plane, m: &IntMatrix) -> Self {
        let d = plane.origin.len();
        let mut bary = vec![BigRational::zero(); d];
        for j in 0..m.cols() {
            let s = BigRational::from_integer(m.column_sum(j));
            for (i, b) in bary.iter_mut().enumerate() {
                *b += BigRational::from_integer(m.get(i, j).clone()) / &s;
            }
        }
        let dn = BigRational::from_integer((d as i64).into());
        bary.iter_mut().for_each(|b| *b /= &dn);
        let diff: Vec<BigRational> = bary.iter().zip(&plane.origin).map(|(b, o)| b - o).collect();
        let gram = RatMatrix::from_rows(vec![
            vec![dot(&plane.u, &plane.u), dot(&plane.u, &plane.v)],
            vec![dot(&plane.v, &plane.u), dot(&plane.v, &plane.v)],
        ]);
        let ab = gram.solve(&[dot(&plane.u, &diff), dot(&plane.v, &diff)]).expect("independent directions");
        let origin = (0..d).map(|i| &plane.origin[i] + &ab[0] * &plane.u[i] + &ab[1] * &plane.v[i]).collect();
        Self::with_origin(plane, origin)
    }

    fn with_origin(plane: &Plane, origin: Vec<BigRational>) -> Self {
        let u: Vec<f64> = plane.u.iter().map(rat_to_f64).collect();
        let v: Vec<f64> = plane.v.iter().map(rat_to_f64).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let e1: Vec<f64> = u.iter().map(|x| x / nu).collect();
        let uv: f64 = v.iter().zip(&e1).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = v.iter().zip(&e1).map(|(a, b)| a - uv * b).collect();
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let e2 = w.iter().map(|x| x / nw).collect();
        Self { origin, u: plane.u.clone(), v: plane.v.clone(), e1, e2, nu, uv, nw }
    }

    pub fn to_ambient(&self, p: [f64; 2]) -> Vec<f64> {
        self.origin
            .iter()
            .zip(self.e1.iter().zip(&self.e2))
            .map(|(o, (a, b))| rat_to_f64(o) + p[0] * a + p[1] * b)
            .collect()
    }

    /// Chart coordinates of the orthogonal projection of `y` onto the plane.
    pub fn project(&self, y: &[BigRational]) -> [f64; 2] {
        let diff: Vec<f64> = y.iter().zip(&self.origin).map(|(a, b)| rat_to_f64(&(a - b))).collect();
        [
            diff.iter().zip(&self.e1).map(|(a, b)| a * b).sum(),
            diff.iter().zip(&self.e2).map(|(a, b)| a * b).sum(),
        ]
    }
}

/// `M Delta` cut by a plane.
#[derive(Clone, Debug, Serialize)]
pub struct SectionPolygon {
    /// Vertices in chart coordinates.
    pub polygon: Polygon,
    pub area: f64,
    pub diameter: f64,
}

/// Section in a chart of the caller's choosing, so that sections of several
/// simplices by the same plane share coordinates. `None` when empty or of
/// zero area.
///
/// The polygon's vertices are found exactly, as the feasible pairwise
/// intersections of the constraint lines `(M^-1 p)_i = 0`, and only then
/// rounded, so sections far thinner than the chart's extent keep their shape.
pub fn section_in_chart(m: &IntMatrix, chart: &Chart) -> Result<Option<SectionPolygon>, GeometryError> {
    let inv = m.to_rational().inverse().ok_or(GeometryError::Singular)?;
    let d = m.rows();
    // a alpha + b beta + c >= 0 for the point origin + alpha u + beta v
    let lines: Vec<[BigRational; 3]> = (0..d)
        .map(|i| {
            let row = inv.row(i);
            [dot(&row, &chart.u), dot(&row, &chart.v), dot(&row, &chart.origin)]
        })
        .collect();
    let feasible = |p: &[BigRational; 2]| lines.iter().all(|l| !(&l[0] * &p[0] + &l[1] * &p[1] + &l[2]).is_negative());
    let mut corners: Vec<[BigRational; 2]> = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let (li, lj) = (&lines[i], &lines[j]);
            let det = &li[0] * &lj[1] - &li[1] * &lj[0];
            if det.is_zero() {
                continue;
            }
            let p = [(&li[1] * &lj[2] - &lj[1] * &li[2]) / &det, (&lj[0] * &li[2] - &li[0] * &lj[2]) / &det];
            if feasible(&p) && !corners.contains(&p) {
                corners.push(p);
            }
        }
    }
    if corners.len() < 3 {
        return Ok(None);
    }
    let mut pts: Vec<[f64; 2]> = corners
        .iter()
        .map(|[a, b]| {
            let (a, b) = (rat_to_f64(a), rat_to_f64(b));
            [a * chart.nu + b * chart.uv, b * chart.nw]
        })
        .collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    pts.sort_by(|p, q| (p[1] - cy).atan2(p[0] - cx).total_cmp(&(q[1] - cy).atan2(q[0] - cx)));
    let poly = Polygon::new(pts);
    if poly.is_empty() {
        return Ok(None);
    }
    Ok(Some(SectionPolygon { area: poly.area(), diameter: poly.diameter(), polygon: poly }))
}

/// Section in a chart centered near the simplex.
pub fn section(m: &IntMatrix, plane: &Plane) -> Result<Option<SectionPolygon>, GeometryError> {
    section_in_chart(m, &Chart::centered(plane, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rat;

    fn family4() -> PlaneFamily {
        let u = vec![rat(1, 1), rat(-1, 1), rat(0, 1), rat(0, 1)];
        let v = vec![rat(0, 1), rat(0, 1), rat(1, 1), rat(-1, 1)];
        family_from_directions(4, u, v).unwrap()
    }

    #[test]
    fn barycenter_section() {
        let fam = family4();
        let plane = fam.plane(&rat(1, 2), &[]);
        let chart = Chart::new(&plane);
        let s = section_in_chart(&IntMatrix::identity(4), &chart).unwrap().unwrap();
        assert!(s.polygon.contains([0.0, 0.0], 1e-12));
        assert!(s.area > 0.0);
    }

    #[test]
    fn vertices_satisfy_facets() {
        let fam = family4();
        let plane = fam.plane(&rat(3, 10), &[]);
        let chart = Chart::new(&plane);
        let s = section_in_chart(&IntMatrix::identity(4), &chart).unwrap().unwrap();
        for p in &s.polygon.vertices {
            let y = chart.to_ambient(*p);
            assert!(y.iter().all(|&x| x >= -1e-12));
            assert!((y[2] + y[3] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn translate_outside_is_empty() {
        let fam = family4();
        let plane = fam.plane(&rat(3, 2), &[]);
        assert!(section(&IntMatrix::identity(4), &plane).unwrap().is_none());
    }

    #[test]
    fn dependent_directions_rejected() {
        let u = vec![rat(1, 1), rat(-1, 1), rat(0, 1), rat(0, 1)];
        assert!(family_from_directions(4, u.clone(), u).is_err());
    }
}
