//! Convex polygons in the plane.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// `a x + b y + c >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn value(&self, p: Point) -> f64 {
        self.a * p[0] + self.b * p[1] + self.c
    }
}

/// Counter-clockwise convex polygon.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<Point>) -> Self {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3 || self.area() <= 0.0
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut a = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let cross = p[0] * q[1] - q[0] * p[1];
            a += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
        }
        if a.abs() < 1e-300 {
            let m = n.max(1) as f64;
            return [
                self.vertices.iter().map(|p| p[0]).sum::<f64>() / m,
                self.vertices.iter().map(|p| p[1]).sum::<f64>() / m,
            ];
        }
        [cx / (3.0 * a), cy / (3.0 * a)]
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, p) in self.vertices.iter().enumerate() {
            for q in &self.vertices[i + 1..] {
                best = best.max(dist(*p, *q));
            }
        }
        best
    }

    pub fn clip(&self, h: &HalfPlane) -> Polygon {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let (vp, vq) = (h.value(p), h.value(q));
            if vp >= 0.0 {
                out.push(p);
            }
            if (vp >= 0.0) != (vq >= 0.0) {
                let t = vp / (vp - vq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        Polygon { vertices: out }
    }

    pub fn clip_all<'a>(&self, hs: impl IntoIterator<Item = &'a HalfPlane>) -> Polygon {
        let mut poly = self.clone();
        for h in hs {
            if poly.vertices.is_empty() {
                break;
            }
            poly = poly.clip(h);
        }
        poly
    }

    /// Closed containment with an absolute tolerance.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = dist(a, b);
            len == 0.0 || cross(a, b, p) / len >= -tol
        })
    }

    /// Every vertex of `other` lies in `self`.
    pub fn contains_polygon(&self, other: &Polygon, tol: f64) -> bool {
        other.vertices.iter().all(|&p| self.contains(p, tol))
    }

    /// Area of the intersection with the disk of radius `r` about `c`.
    pub fn disk_intersection_area(&self, c: Point, r: f64) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let p = [self.vertices[i][0] - c[0], self.vertices[i][1] - c[1]];
            let q = [self.vertices[(i + 1) % n][0] - c[0], self.vertices[(i + 1) % n][1] - c[1]];
            total += triangle_disk_area(p, q, r);
        }
        total.abs()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

pub fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn cross(a: Point, b: Point, p: Point) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    s / 2.0
}

/// Signed area of the intersection of triangle `(0, p, q)` with the disk of
/// radius `r` about the origin.
fn triangle_disk_area(p: Point, q: Point, r: f64) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let b = p[0] * d[0] + p[1] * d[1];
    let c = p[0] * p[0] + p[1] * p[1] - r * r;
    let sector = |u: Point, v: Point| -> f64 {
        let ang = (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
        0.5 * r * r * ang
    };
    let tri = |u: Point, v: Point| 0.5 * (u[0] * v[1] - u[1] * v[0]);
    if a == 0.0 {
        return 0.0;
    }
    let disc = b * b - a * c;
    let inside_p = c <= 0.0;
    let inside_q = q[0] * q[0] + q[1] * q[1] <= r * r;
    if disc <= 0.0 {
        return sector(p, q);
    }
    let s = disc.sqrt();
    let t1 = ((-b - s) / a).clamp(0.0, 1.0);
    let t2 = ((-b + s) / a).clamp(0.0, 1.0);
    let at = |t: f64| [p[0] + t * d[0], p[1] + t * d[1]];
    match (inside_p, inside_q) {
        (true, true) => tri(p, q),
        (true, false) => tri(p, at(t2)) + sector(at(t2), q),
        (false, true) => sector(p, at(t1)) + tri(at(t1), q),
        (false, false) => {
            if t1 < t2 && (-b - s) / a < 1.0 && (-b + s) / a > 0.0 {
                sector(p, at(t1)) + tri(at(t1), at(t2)) + sector(at(t2), q)
            } else {
                sector(p, q)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let sq = Polygon::rectangle(0.0, 0.0, 1.0, 1.0);
        assert!((sq.area() - 1.0).abs() < 1e-15);
        assert!((sq.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.centroid(), [0.5, 0.5]);
        assert!(sq.contains([0.5, 0.5], 0.0));
        assert!(!sq.contains([1.5, 0.5], 1e-12));
    }

    #[test]
    fn clipping_halves_the_square() {
        let sq = Polygon::rectangle(0.0, 0.0, 1.0, 1.0);
        let half = sq.clip(&HalfPlane { a: -1.0, b: 0.0, c: 0.5 });
        assert!((half.area() - 0.5).abs() < 1e-15);
        let none = sq.clip(&HalfPlane { a: 1.0, b: 0.0, c: -2.0 });
        assert!(none.is_empty());
    }

    #[test]
    fn disk_areas() {
        let big = Polygon::rectangle(-10.0, -10.0, 10.0, 10.0);
        let a = big.disk_intersection_area([0.0, 0.0], 1.0);
        assert!((a - std::f64::consts::PI).abs() < 1e-12);
        let sq = Polygon::rectangle(0.0, 0.0, 1.0, 1.0);
        assert!((sq.disk_intersection_area([0.0, 0.0], 1.0) - std::f64::consts::PI / 4.0).abs() < 1e-12);
        assert!((sq.disk_intersection_area([0.5, 0.5], 10.0) - 1.0).abs() < 1e-12);
        // disk centered on an edge midpoint
        let r = 0.25;
        let got = sq.disk_intersection_area([0.5, 0.0], r);
        assert!((got - std::f64::consts::PI * r * r / 2.0).abs() < 1e-12);
    }
}
