//! Areas of parallel 2-plane sections of convex bodies in `R^4`.
//!
//! The square root of the section area is concave over the translates
//! (Brunn-Minkowski), so only a thin collar of planes near the boundary of
//! the family can have a small section; the test measures that collar.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::GeometryError;
use crate::planar::{HalfPlane, Point, Polygon};
use crate::sampling::parallel_chunks;

#[derive(Clone, Debug)]
pub enum Body {
    /// Five affinely independent points of `R^4`.
    Simplex(Vec<[f64; 4]>),
    Ball { center: [f64; 4], radius: f64 },
}

#[derive(Clone, Debug)]
pub struct ConcavityConfig {
    pub samples: usize,
    /// Constant in the `C sqrt(eps)` bound.
    pub c_bound: f64,
    /// Random offsets probed before refining the maximal area.
    pub max_probes: usize,
    pub seed: u64,
}

impl Default for ConcavityConfig {
    fn default() -> Self {
        Self { samples: 20_000, c_bound: 10.0, max_probes: 400, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub epsilon: f64,
    /// Fraction of planes meeting the body whose section area is below
    /// `epsilon * max_area`.
    pub fraction: f64,
    pub stderr: f64,
    pub samples: usize,
    pub max_area: f64,
    pub bound: f64,
    pub within_bound: bool,
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal frame `(e1, e2, n1, n2)` with `e1, e2` spanning `span(u, v)`.
fn frame(u: &[f64; 4], v: &[f64; 4]) -> Result<[[f64; 4]; 4], GeometryError> {
    let mut basis: Vec<[f64; 4]> = Vec::new();
    let candidates = [*u, *v, [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    for (k, c) in candidates.iter().enumerate() {
        let mut w = *c;
        for b in &basis {
            let p = dot4(&w, b);
            for i in 0..4 {
                w[i] -= p * b[i];
            }
        }
        let n = dot4(&w, &w).sqrt();
        if n > 1e-9 {
            basis.push(w.map(|x| x / n));
        } else if k < 2 {
            return Err(GeometryError::Degenerate("plane directions are dependent".into()));
        }
        if basis.len() == 4 {
            break;
        }
    }
    Ok([basis[0], basis[1], basis[2], basis[3]])
}

struct Prepared {
    frame: [[f64; 4]; 4],
    /// Barycentric coordinate functionals `lambda_i(p) = a_i . p + b_i`.
    bary: Vec<([f64; 4], f64)>,
    /// Projection of the body onto the offset coordinates.
    shadow: Polygon,
    radius: f64,
    ball: Option<([f64; 4], f64)>,
}

impl Prepared {
    fn new(body: &Body, u: &[f64; 4], v: &[f64; 4]) -> Result<Self, GeometryError> {
        let frame = frame(u, v)?;
        let offset = |p: &[f64; 4]| -> Point { [dot4(p, &frame[2]), dot4(p, &frame[3])] };
        match body {
            Body::Simplex(verts) => {
                if verts.len() != 5 {
                    return Err(GeometryError::Degenerate("a 4-simplex has five vertices".into()));
                }
                let b = DMatrix::from_fn(5, 5, |i, j| if i < 4 { verts[j][i] } else { 1.0 });
                let inv = b.try_inverse().ok_or(GeometryError::Singular)?;
                let bary = (0..5)
                    .map(|i| ([inv[(i, 0)], inv[(i, 1)], inv[(i, 2)], inv[(i, 3)]], inv[(i, 4)]))
                    .collect();
                let shadow = convex_hull(verts.iter().map(offset).collect());
                if shadow.area() <= 0.0 {
                    return Err(GeometryError::Degenerate("family of planes has zero measure".into()));
                }
                let radius = verts.iter().map(|p| dot4(p, p).sqrt()).fold(0.0, f64::max) * 2.0 + 1.0;
                Ok(Self { frame, bary, shadow, radius, ball: None })
            }
            Body::Ball { center, radius } => {
                if *radius <= 0.0 {
                    return Err(GeometryError::Degenerate("family of planes has zero measure".into()));
                }
                let c = offset(center);
                let n = 256;
                let shadow = Polygon::new(
                    (0..n)
                        .map(|k| {
                            let t = std::f64::consts::TAU * k as f64 / n as f64;
                            [c[0] + radius * t.cos(), c[1] + radius * t.sin()]
                        })
                        .collect(),
                );
                Ok(Self { frame, bary: Vec::new(), shadow, radius: *radius, ball: Some((*center, *radius)) })
            }
        }
    }

    /// Area of the section by the plane with offset coordinates `s`.
    fn area(&self, s: Point) -> f64 {
        if let Some((center, r)) = self.ball {
            let cs = [dot4(&center, &self.frame[2]), dot4(&center, &self.frame[3])];
            let h2 = (s[0] - cs[0]).powi(2) + (s[1] - cs[1]).powi(2);
            return std::f64::consts::PI * (r * r - h2).max(0.0);
        }
        let [e1, e2, n1, n2] = self.frame;
        let halves: Vec<HalfPlane> = self
            .bary
            .iter()
            .map(|(a, b)| {
                let base: f64 = (0..4).map(|i| a[i] * (s[0] * n1[i] + s[1] * n2[i])).sum::<f64>() + b;
                HalfPlane { a: dot4(a, &e1), b: dot4(a, &e2), c: base }
            })
            .collect();
        let r = self.radius;
        Polygon::rectangle(-r, -r, r, r).clip_all(&halves).area()
    }

    fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        if let Some((center, r)) = self.ball {
            let cs = [dot4(&center, &self.frame[2]), dot4(&center, &self.frame[3])];
            let rho = r * rng.gen::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.gen::<f64>();
            return [cs[0] + rho * t.cos(), cs[1] + rho * t.sin()];
        }
        sample_polygon(rng, &self.shadow)
    }

    fn max_area(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = crate::sampling::substream(seed, u64::MAX);
        let mut best = self.shadow.centroid();
        let mut best_a = self.area(best);
        for _ in 0..probes {
            let s = self.sample_offset(&mut rng);
            let a = self.area(s);
            if a > best_a {
                best = s;
                best_a = a;
            }
        }
        // pattern search; sqrt(area) is concave so local is global
        let (lo, hi) = self.shadow.bounding_box();
        let mut step = (hi[0] - lo[0]).max(hi[1] - lo[1]) / 8.0;
        while step > 1e-12 * (1.0 + self.radius) {
            let mut moved = false;
            for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.7071, 0.7071], [-0.7071, -0.7071], [0.7071, -0.7071], [-0.7071, 0.7071]] {
                let s = [best[0] + step * dir[0], best[1] + step * dir[1]];
                let a = self.area(s);
                if a > best_a {
                    best = s;
                    best_a = a;
                    moved = true;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        best_a
    }
}

fn convex_hull(mut pts: Vec<Point>) -> Polygon {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Polygon { vertices: pts };
    }
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Polygon::new(lower)
}

/// Uniform point of a convex polygon by fan triangulation.
fn sample_polygon<R: Rng + ?Sized>(rng: &mut R, poly: &Polygon) -> Point {
    let v = &poly.vertices;
    let tri_area = |a: Point, b: Point, c: Point| ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs() / 2.0;
    let areas: Vec<f64> = (1..v.len() - 1).map(|i| tri_area(v[0], v[i], v[i + 1])).collect();
    let total: f64 = areas.iter().sum();
    let mut pick = rng.gen::<f64>() * total;
    let mut i = 0;
    while i + 1 < areas.len() && pick > areas[i] {
        pick -= areas[i];
        i += 1;
    }
    let (mut r1, mut r2) = (rng.gen::<f64>(), rng.gen::<f64>());
    if r1 + r2 > 1.0 {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
    }
    let (a, b, c) = (v[0], v[i + 1], v[i + 2]);
    [a[0] + r1 * (b[0] - a[0]) + r2 * (c[0] - a[0]), a[1] + r1 * (b[1] - a[1]) + r2 * (c[1] - a[1])]
}

/// Fraction of planes parallel to `span(u, v)` that meet `body` in a
/// section of area below `epsilon` times the largest section area.
pub fn concavity_test(
    body: &Body,
    u: &[f64; 4],
    v: &[f64; 4],
    epsilon: f64,
    cfg: &ConcavityConfig,
) -> Result<ConcavityReport, GeometryError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(GeometryError::Domain(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let prep = Prepared::new(body, u, v)?;
    let max_area = prep.max_area(cfg.max_probes, cfg.seed);
    let threshold = epsilon * max_area;
    let counts = parallel_chunks(cfg.seed, cfg.samples, 2048, |rng, n| {
        (0..n)
            .filter(|_| {
                let s = prep.sample_offset(rng);
                // epsilon = 1 counts every plane
                prep.area(s) < threshold || epsilon >= 1.0
            })
            .count()
    });
    let hits: usize = counts.into_iter().sum();
    let n = cfg.samples.max(1) as f64;
    let fraction = hits as f64 / n;
    let stderr = (fraction * (1.0 - fraction) / n).sqrt();
    let bound = cfg.c_bound * epsilon.sqrt();
    Ok(ConcavityReport {
        epsilon,
        fraction,
        stderr,
        samples: cfg.samples,
        max_area,
        bound,
        within_bound: fraction <= bound,
    })
}

/// Exact fraction for a ball: offsets are uniform on a disk and the section
/// by the plane at distance `h` has area `pi (r^2 - h^2)`.
pub fn ball_section_fraction(epsilon: f64) -> f64 {
    epsilon.clamp(0.0, 1.0)
}

/// Simplex with standard normal vertices.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R) -> Body {
    let normal = |rng: &mut R| {
        // Box-Muller
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        (-2.0 * (1.0 - a).ln()).sqrt() * (std::f64::consts::TAU * b).cos()
    };
    Body::Simplex((0..5).map(|_| [normal(rng), normal(rng), normal(rng), normal(rng)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
    const V: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

    #[test]
    fn ball_matches_closed_form() {
        let body = Body::Ball { center: [0.0; 4], radius: 1.0 };
        let cfg = ConcavityConfig { samples: 20_000, ..Default::default() };
        let r = concavity_test(&body, &U, &V, 0.1, &cfg).unwrap();
        assert!((r.max_area - std::f64::consts::PI).abs() < 1e-6);
        assert!((r.fraction - ball_section_fraction(0.1)).abs() < 3.0 * r.stderr.max(1e-3));
    }

    #[test]
    fn epsilon_one_is_everything() {
        let body = Body::Ball { center: [0.0; 4], radius: 1.0 };
        let cfg = ConcavityConfig { samples: 1000, ..Default::default() };
        let r = concavity_test(&body, &U, &V, 1.0, &cfg).unwrap();
        assert_eq!(r.fraction, 1.0);
    }

    #[test]
    fn unit_simplex_sections() {
        let mut verts = vec![[0.0; 4]];
        for i in 0..4 {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            verts.push(e);
        }
        let prep = Prepared::new(&Body::Simplex(verts), &U, &V).unwrap();
        // the plane z = w = 0 cuts the triangle x, y >= 0, x + y <= 1
        assert!((prep.area([0.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!((prep.max_area(100, 1) - 0.5).abs() < 1e-9);
    }
}
