//! Box counting, the area-proportional measure on a nested polygon family,
//! and ball-mass scans of that measure.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::report::{fit_line, LineFit};
use super::AnalysisError;
use crate::planar::{Point, Polygon};

/// Sets that `box_dimension` can cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxSet {
    /// Closed intervals of the line.
    Intervals(Vec<(f64, f64)>),
    /// Finite point set in any dimension.
    Points(Vec<Vec<f64>>),
    /// Convex polygons of the plane.
    Polygons(Vec<Polygon>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub estimate: f64,
    pub radii: Vec<f64>,
    pub counts: Vec<u64>,
    pub fit: LineFit,
    /// `ln N(r) - (a + s ln(1/r))` per scale.
    pub residuals: Vec<f64>,
}

/// Radii `r_max, r_max * ratio, ...` down to `r_min`.
pub fn geometric_grid(r_max: f64, r_min: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) && out.len() < 200 {
        out.push(r);
        r *= ratio;
    }
    out
}

// grid cells are half-open; points on a cell boundary within this relative
// slack go to the lower cell so that exact dyadic or triadic sets are not
// double counted
const EDGE_SLACK: f64 = 1e-9;

fn cell_range(a: f64, b: f64, r: f64) -> (i64, i64) {
    let lo = (a / r + EDGE_SLACK).floor() as i64;
    let hi = ((b / r - EDGE_SLACK).ceil() as i64 - 1).max(lo);
    (lo, hi)
}

fn count_intervals(set: &[(f64, f64)], r: f64) -> u64 {
    let mut ranges: Vec<(i64, i64)> = set.iter().map(|&(a, b)| cell_range(a.min(b), a.max(b), r)).collect();
    ranges.sort_unstable();
    let mut total = 0u64;
    let mut reach = i64::MIN;
    for (lo, hi) in ranges {
        let start = lo.max(reach.saturating_add(1));
        if hi >= start {
            total += (hi - start + 1) as u64;
        }
        reach = reach.max(hi);
    }
    total
}

fn count_points(set: &[Vec<f64>], r: f64) -> u64 {
    let cells: HashSet<Vec<i64>> = set.iter().map(|p| p.iter().map(|x| (x / r).floor() as i64).collect()).collect();
    cells.len() as u64
}

fn count_polygons(set: &[Polygon], r: f64) -> u64 {
    let mut cells = HashSet::new();
    for poly in set {
        let (lo, hi) = poly.bounding_box();
        let (x0, x1) = cell_range(lo[0], hi[0], r);
        let (y0, y1) = cell_range(lo[1], hi[1], r);
        let tol = r * r * EDGE_SLACK;
        for i in x0..=x1 {
            for j in y0..=y1 {
                if cells.contains(&(i, j)) {
                    continue;
                }
                let cell = Polygon::rectangle(i as f64 * r, j as f64 * r, (i + 1) as f64 * r, (j + 1) as f64 * r);
                let inside = cell.vertices.iter().all(|&p| poly.contains(p, 0.0));
                if inside || intersection_area(poly, &cell) > tol {
                    cells.insert((i, j));
                }
            }
        }
    }
    cells.len() as u64
}

fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    let n = b.vertices.len();
    let halves: Vec<crate::planar::HalfPlane> = (0..n)
        .map(|i| {
            let p = b.vertices[i];
            let q = b.vertices[(i + 1) % n];
            // left of p -> q, counter-clockwise
            crate::planar::HalfPlane { a: p[1] - q[1], b: q[0] - p[0], c: p[0] * q[1] - p[1] * q[0] }
        })
        .collect();
    a.clip_all(&halves).area()
}

/// Least-squares slope of `ln N(r)` against `ln(1/r)`, where `N(r)` counts
/// the cells of the grid of side `r` anchored at the origin that meet the set.
pub fn box_dimension(set: &BoxSet, radii: &[f64]) -> Result<DimensionFit, AnalysisError> {
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(AnalysisError::Domain("box counting needs at least two positive scales".into()));
    }
    let counts: Vec<u64> = radii
        .iter()
        .map(|&r| match set {
            BoxSet::Intervals(s) => count_intervals(s, r),
            BoxSet::Points(s) => count_points(s, r),
            BoxSet::Polygons(s) => count_polygons(s, r),
        })
        .collect();
    let used: Vec<(f64, f64)> =
        radii.iter().zip(&counts).filter(|(_, &n)| n > 0).map(|(&r, &n)| ((1.0 / r).ln(), (n as f64).ln())).collect();
    if used.len() < 2 {
        return Err(AnalysisError::Domain("fewer than two non-empty scales".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = used.iter().copied().unzip();
    let fit = fit_line(&xs, &ys, None).ok_or_else(|| AnalysisError::Domain("scales are not distinct".into()))?;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - fit.intercept - fit.slope * x).collect();
    Ok(DimensionFit { estimate: fit.slope, radii: radii.to_vec(), counts, fit, residuals })
}

/// Middle-thirds Cantor intervals after `levels` subdivisions.
pub fn cantor_intervals(levels: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 1.0)];
    for _ in 0..levels {
        out = out
            .iter()
            .flat_map(|&(a, b)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    out
}

/// Polygon with a parent in the previous level of its family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedPolygon {
    pub polygon: Polygon,
    pub area: f64,
    pub diameter: f64,
    pub parent: Option<usize>,
}

impl NestedPolygon {
    pub fn new(polygon: Polygon, parent: Option<usize>) -> Self {
        Self { area: polygon.area(), diameter: polygon.diameter(), polygon, parent }
    }
}

/// Levels of polygons, each inside its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedFamily {
    pub levels: Vec<Vec<NestedPolygon>>,
    /// Area of level `k` over the area of the level-`(k-1)` polygons that
    /// have children; `1` for the first level.
    pub retained: Vec<f64>,
    /// `(max diameter, min diameter)` per level.
    pub radii: Vec<(f64, f64)>,
}

impl NestedFamily {
    pub fn new(levels: Vec<Vec<NestedPolygon>>) -> Result<Self, AnalysisError> {
        if levels.is_empty() || levels[0].is_empty() {
            return Err(AnalysisError::Domain("family has no polygons".into()));
        }
        for (k, level) in levels.iter().enumerate() {
            for p in level {
                let ok = match (k, p.parent) {
                    (0, None) => true,
                    (k, Some(i)) if k > 0 => i < levels[k - 1].len(),
                    _ => false,
                };
                if !ok {
                    return Err(AnalysisError::Domain(format!("bad parent link at level {k}")));
                }
            }
        }
        let mut retained = vec![1.0];
        for k in 1..levels.len() {
            let parents: HashSet<usize> = levels[k].iter().filter_map(|p| p.parent).collect();
            let above: f64 = parents.iter().map(|&i| levels[k - 1][i].area).sum();
            let here: f64 = levels[k].iter().map(|p| p.area).sum();
            retained.push(if above > 0.0 { here / above } else { 0.0 });
        }
        let radii = levels
            .iter()
            .map(|l| {
                let max = l.iter().map(|p| p.diameter).fold(0.0, f64::max);
                let min = l.iter().map(|p| p.diameter).fold(f64::INFINITY, f64::min);
                (max, if min.is_finite() { min } else { 0.0 })
            })
            .collect();
        Ok(Self { levels, retained, radii })
    }

    /// Every polygon lies in its parent up to `rel_tol` times the parent's
    /// diameter.
    pub fn nesting_holds(&self, rel_tol: f64) -> bool {
        self.levels.windows(2).all(|w| {
            w[1].iter().all(|c| {
                let p = &w[0][c.parent.expect("checked")];
                p.polygon.contains_polygon(&c.polygon, rel_tol * p.diameter)
            })
        })
    }

    /// Family of squares over the product of two middle-thirds Cantor sets.
    pub fn cantor_product(levels: usize) -> Self {
        let mut out: Vec<Vec<NestedPolygon>> = vec![vec![NestedPolygon::new(Polygon::rectangle(0.0, 0.0, 1.0, 1.0), None)]];
        let mut corners = vec![[0.0f64, 0.0f64]];
        let mut side = 1.0;
        for _ in 1..levels {
            side /= 3.0;
            let mut next = Vec::new();
            let mut next_corners = Vec::new();
            for (i, c) in corners.iter().enumerate() {
                for (dx, dy) in [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)] {
                    let x = c[0] + dx * side;
                    let y = c[1] + dy * side;
                    next.push(NestedPolygon::new(Polygon::rectangle(x, y, x + side, y + side), Some(i)));
                    next_corners.push([x, y]);
                }
            }
            out.push(next);
            corners = next_corners;
        }
        Self::new(out).expect("non-empty")
    }
}

/// Area-proportional measure on a nested family: the first level carries
/// normalized area, and each polygon passes its mass to its children in
/// proportion to their areas. Polygons without children keep their mass at
/// their own level only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanMeasure {
    pub weights: Vec<Vec<f64>>,
    /// Total weight per level.
    pub level_mass: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassReport {
    pub radii: Vec<f64>,
    /// Largest ball mass found over the probe points, per radius; a lower
    /// bound on the supremum.
    pub sup_mass: Vec<f64>,
    /// Slope of `ln sup_mass` against `ln r`.
    pub exponent: f64,
    pub fit: LineFit,
    /// Smallest `ln sup_mass / ln r` over the grid.
    pub worst_ratio_exponent: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallScanConfig {
    /// Ratio between consecutive radii.
    pub ratio: f64,
    /// Largest number of probe points; a deterministic stride subsamples beyond it.
    pub max_probes: usize,
}

impl Default for BallScanConfig {
    fn default() -> Self {
        Self { ratio: 0.5, max_probes: 20_000 }
    }
}

pub fn frostman_weights(family: &NestedFamily) -> Result<FrostmanMeasure, AnalysisError> {
    let first: f64 = family.levels[0].iter().map(|p| p.area).sum();
    if !(first > 0.0) {
        return Err(AnalysisError::Domain("family has zero area".into()));
    }
    let mut weights = vec![family.levels[0].iter().map(|p| p.area / first).collect::<Vec<_>>()];
    for k in 1..family.levels.len() {
        let mut child_area: HashMap<usize, f64> = HashMap::new();
        for p in &family.levels[k] {
            *child_area.entry(p.parent.expect("checked")).or_default() += p.area;
        }
        let w: Vec<f64> = family.levels[k]
            .iter()
            .map(|p| {
                let parent = p.parent.expect("checked");
                let total = child_area[&parent];
                if total > 0.0 {
                    weights[k - 1][parent] * p.area / total
                } else {
                    0.0
                }
            })
            .collect();
        weights.push(w);
    }
    let level_mass = weights.iter().map(|w| w.iter().sum()).collect();
    Ok(FrostmanMeasure { weights, level_mass })
}

/// Uniform bucket grid over the finest polygons for disk queries.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(polys: &[NestedPolygon], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in polys.iter().enumerate() {
            let (lo, hi) = p.polygon.bounding_box();
            for x in (lo[0] / cell).floor() as i64..=(hi[0] / cell).floor() as i64 {
                for y in (lo[1] / cell).floor() as i64..=(hi[1] / cell).floor() as i64 {
                    map.entry((x, y)).or_default().push(i);
                }
            }
        }
        Self { cell, map }
    }

    fn near(&self, c: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let (x0, x1) = (((c[0] - r) / self.cell).floor() as i64, ((c[0] + r) / self.cell).floor() as i64);
        let (y0, y1) = (((c[1] - r) / self.cell).floor() as i64, ((c[1] + r) / self.cell).floor() as i64);
        for x in x0..=x1 {
            for y in y0..=y1 {
                if let Some(v) = self.map.get(&(x, y)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Measure of `B(x, r)` under the finest level of the measure, taken to be
/// a multiple of area on each polygon, maximized over probe points at the
/// vertices and centroids of the finest polygons.
///
/// The radii run from the smallest finest-level diameter up to the largest
/// second-level diameter by factors of `1 / ratio`; a single-level family
/// scans radii well below its smallest diameter instead.
pub fn ball_mass_scan(
    family: &NestedFamily,
    measure: &FrostmanMeasure,
    cfg: &BallScanConfig,
) -> Result<BallMassReport, AnalysisError> {
    let last = family.levels.len() - 1;
    let polys = &family.levels[last];
    let weights = &measure.weights[last];
    // balls wider than the second-level polygons only see the normalization
    let r_top = family.radii[last.min(1)].0;
    let r_bottom = family.radii[last].1;
    if !(r_bottom > 0.0) || !(cfg.ratio > 0.0 && cfg.ratio < 1.0) {
        return Err(AnalysisError::Domain("degenerate radii or scan ratio".into()));
    }
    let mut radii = if last == 0 {
        geometric_grid(r_bottom * cfg.ratio.powi(2), r_bottom * cfg.ratio.powi(7), cfg.ratio)
    } else {
        geometric_grid(r_top, r_bottom, cfg.ratio)
    };
    radii.reverse();
    let mut probes: Vec<Point> = polys.iter().flat_map(|p| {
        let mut v = p.polygon.vertices.clone();
        v.push(p.polygon.centroid());
        v
    }).collect();
    if probes.len() > cfg.max_probes {
        let stride = probes.len().div_ceil(cfg.max_probes);
        probes = probes.into_iter().step_by(stride).collect();
    }
    let buckets = Buckets::new(polys, r_bottom.max(r_top / 64.0));
    let sup_mass: Vec<f64> = radii
        .iter()
        .map(|&r| {
            probes
                .iter()
                .map(|&x| {
                    buckets
                        .near(x, r)
                        .into_iter()
                        .filter(|&i| polys[i].area > 0.0)
                        .map(|i| weights[i] * polys[i].polygon.disk_intersection_area(x, r) / polys[i].area)
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let used: Vec<(f64, f64)> =
        radii.iter().zip(&sup_mass).filter(|(_, &m)| m > 0.0).map(|(&r, &m)| (r.ln(), m.ln())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = used.iter().copied().unzip();
    let fit = fit_line(&xs, &ys, None).ok_or_else(|| AnalysisError::Domain("fewer than two usable radii".into()))?;
    let worst_ratio_exponent = used.iter().filter(|(lr, _)| *lr < 0.0).map(|(lr, lm)| lm / lr).fold(f64::INFINITY, f64::min);
    Ok(BallMassReport {
        radii,
        sup_mass,
        exponent: fit.slope,
        fit,
        worst_ratio_exponent,
        probes: probes.len(),
    })
}

/// The measure and its ball-mass scan.
pub fn frostman_measure(
    family: &NestedFamily,
    cfg: &BallScanConfig,
) -> Result<(FrostmanMeasure, BallMassReport), AnalysisError> {
    let measure = frostman_weights(family)?;
    let scan = ball_mass_scan(family, &measure, cfg)?;
    Ok((measure, scan))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_and_square() {
        let radii = geometric_grid(0.5, 1.0 / 256.0, 0.5);
        let seg = box_dimension(&BoxSet::Intervals(vec![(0.0, 1.0)]), &radii).unwrap();
        assert!((seg.estimate - 1.0).abs() < 1e-9, "{seg:?}");
        let sq = box_dimension(&BoxSet::Polygons(vec![Polygon::rectangle(0.0, 0.0, 1.0, 1.0)]), &radii).unwrap();
        assert!((sq.estimate - 2.0).abs() < 1e-9, "{sq:?}");
        assert_eq!(sq.counts.last(), Some(&65536));
    }

    #[test]
    fn cantor_at_triadic_scales() {
        let set = BoxSet::Intervals(cantor_intervals(10));
        let radii = geometric_grid(1.0 / 3.0, 3f64.powi(-10), 1.0 / 3.0);
        let fit = box_dimension(&set, &radii).unwrap();
        assert_eq!(fit.counts, (1..=10).map(|j| 1u64 << j).collect::<Vec<_>>());
        assert!((fit.estimate - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn too_few_scales() {
        let set = BoxSet::Points(vec![vec![0.1, 0.2]]);
        assert!(box_dimension(&set, &[0.1]).is_err());
        assert!(box_dimension(&BoxSet::Points(vec![]), &[0.1, 0.05]).is_err());
    }

    #[test]
    fn weights_split_by_area() {
        let fam = NestedFamily::cantor_product(3);
        assert!(fam.nesting_holds(1e-10));
        assert!((fam.retained[1] - 4.0 / 9.0).abs() < 1e-12);
        let m = frostman_weights(&fam).unwrap();
        for k in 1..3 {
            for (i, w) in m.weights[k - 1].iter().enumerate() {
                let s: f64 = fam.levels[k].iter().zip(&m.weights[k]).filter(|(p, _)| p.parent == Some(i)).map(|(_, w)| w).sum();
                assert!((s - w).abs() < 1e-15);
            }
        }
        assert!(m.level_mass.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_level_is_planar() {
        let fam = NestedFamily::new(vec![vec![NestedPolygon::new(Polygon::rectangle(0.0, 0.0, 1.0, 1.0), None)]]).unwrap();
        let (_, scan) = frostman_measure(&fam, &BallScanConfig::default()).unwrap();
        assert!((scan.exponent - 2.0).abs() < 0.05, "{scan:?}");
    }

    #[test]
    fn cantor_product_exponent() {
        let fam = NestedFamily::cantor_product(6);
        let (_, scan) = frostman_measure(&fam, &BallScanConfig::default()).unwrap();
        let target = 2.0 * 2f64.ln() / 3f64.ln();
        assert!((scan.exponent - target).abs() < 0.05, "{} vs {target}", scan.exponent);
    }
}
