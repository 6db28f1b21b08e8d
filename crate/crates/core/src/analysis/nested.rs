//! Sections of branching stage simplices by the planes of the construction.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dimension::{NestedFamily, NestedPolygon};
use super::AnalysisError;
use crate::construction::{generate_stage, nested, ConstructionRun, Phase, PhaseContext};
use crate::geometry::{plane_family, section_in_chart, Chart, PlaneFamily};
use crate::matrix::{rat_to_f64, IntMatrix};
use crate::planar::Polygon;
use crate::sampling::substream;
use crate::symplectic::omega;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedConfig {
    /// Children drawn for every simplex, counting the run's own stage.
    pub branching: usize,
    pub planes: usize,
    pub seed: u64,
    /// Exponent slack in `rbar_k^(1+epsilon) / rhat_(k+1)`.
    pub epsilon: f64,
    /// Draws per child before giving up on finding a new disjoint simplex.
    pub attempts: usize,
    /// Nesting tolerance relative to the parent's diameter.
    pub nesting_tol: f64,
}

impl Default for NestedConfig {
    fn default() -> Self {
        Self { branching: 3, planes: 4, seed: 7, epsilon: 0.1, attempts: 8, nesting_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub matrix: IntMatrix,
    pub parent: Option<usize>,
}

/// Stage simplices: level `k` holds cumulative matrices of `k` stages, the
/// run's own chain first.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexTree {
    pub levels: Vec<Vec<TreeNode>>,
}

/// Children of one simplex: the run's stage if the simplex is on the run's
/// chain, then fresh draws of the same stage whose simplices are disjoint
/// from the ones already kept.
fn children(
    ctx: &PhaseContext,
    run: &ConstructionRun,
    k: usize,
    parent: &IntMatrix,
    chain: Option<&IntMatrix>,
    cfg: &NestedConfig,
    stream: u64,
) -> Result<Vec<IntMatrix>, AnalysisError> {
    let mut out: Vec<IntMatrix> = chain.into_iter().cloned().collect();
    let mut rng = substream(cfg.seed, stream);
    let mut draws = 0;
    while out.len() < cfg.branching && draws < cfg.attempts * cfg.branching {
        draws += 1;
        let stage = generate_stage(ctx, &run.schedule, &run.config, k, parent, &mut rng)?;
        let m = stage.cumulative;
        if out.iter().all(|o| !nested(o, &m) && !nested(&m, o)) {
            out.push(m);
        }
    }
    Ok(out)
}

pub fn simplex_tree(run: &ConstructionRun, cfg: &NestedConfig) -> Result<SimplexTree, AnalysisError> {
    let ctx = PhaseContext::new(run.d()).map_err(crate::construction::ConstructionError::from)?;
    let mut levels: Vec<Vec<TreeNode>> = Vec::new();
    let mut stream = 0u64;
    let root = IntMatrix::identity(run.d());
    for k in 1..=run.stages.len() {
        let chain = &run.stages[k - 1].cumulative;
        let parents: Vec<(Option<usize>, &IntMatrix)> = match levels.last() {
            None => vec![(None, &root)],
            Some(l) => l.iter().enumerate().map(|(i, n)| (Some(i), &n.matrix)).collect(),
        };
        let mut level = Vec::new();
        for (slot, (parent, m)) in parents.into_iter().enumerate() {
            let on_chain = slot == 0;
            for child in children(&ctx, run, k, m, on_chain.then_some(chain), cfg, stream)? {
                level.push(TreeNode { matrix: child, parent });
            }
            stream += 1;
        }
        levels.push(level);
    }
    Ok(SimplexTree { levels })
}

/// The plane family spanned by the symplectic duals of the first and last
/// columns of the first stage's `A'_1 B_1`.
pub fn run_plane_family(run: &ConstructionRun) -> Result<PlaneFamily, AnalysisError> {
    let stage = run.stages.first().ok_or_else(|| AnalysisError::Domain("run has no stages".into()))?;
    let get = |p: Phase| {
        stage.phase(p).map(|x| x.matrix.as_matrix().clone()).ok_or_else(|| AnalysisError::Domain(format!("first stage lacks {p}")))
    };
    let form = omega(&run.start_permutation())?;
    Ok(plane_family(&get(Phase::RestrictionLhs)?, &get(Phase::FreedomRhs)?, &form)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneReport {
    /// The slice `x_(d-1) + x_d = c` containing the plane.
    pub c: f64,
    /// Exact point of the run's final simplex the plane passes through.
    pub point: Vec<String>,
    pub family: NestedFamily,
    pub nesting: bool,
    /// `rbar_k^(1+epsilon) / rhat_(k+1)` per consecutive pair of levels.
    pub radius_ratios: Vec<f64>,
    /// Per `k`: every level-`(k+2)` polygon, grown by `rbar_(k+2)`, stays in
    /// its level-`k` ancestor.
    pub separation: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedReport {
    pub config: NestedConfig,
    /// Simplices per level of the tree.
    pub tree_sizes: Vec<usize>,
    pub planes: Vec<PlaneReport>,
}

/// Smallest signed distance from a vertex of `inner` to an edge line of
/// `outer`; positive when `inner` sits strictly inside.
pub fn inset_distance(outer: &Polygon, inner: &Polygon) -> f64 {
    let n = outer.vertices.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = outer.vertices[i];
        let b = outer.vertices[(i + 1) % n];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        for p in &inner.vertices {
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            best = best.min(cross / len);
        }
    }
    best
}

fn plane_report(
    tree: &SimplexTree,
    family: &PlaneFamily,
    point: Vec<BigRational>,
    cfg: &NestedConfig,
) -> Result<PlaneReport, AnalysisError> {
    let plane = family.plane_through(&point);
    // chart origin at the point, inside every section along the run's chain
    let chart = Chart::new(&plane);
    let mut levels: Vec<Vec<NestedPolygon>> = Vec::new();
    // tree index -> polygon index, per level
    let mut index: Vec<Option<usize>> = Vec::new();
    for level in &tree.levels {
        let mut polys = Vec::new();
        let mut next_index = Vec::with_capacity(level.len());
        for node in level {
            let parent = match node.parent {
                None => None,
                Some(p) => match index[p] {
                    Some(i) => Some(i),
                    None => {
                        next_index.push(None);
                        continue;
                    }
                },
            };
            match section_in_chart(&node.matrix, &chart)? {
                Some(s) if s.area > 0.0 => {
                    next_index.push(Some(polys.len()));
                    polys.push(NestedPolygon::new(s.polygon, parent));
                }
                _ => next_index.push(None),
            }
        }
        if polys.is_empty() {
            break;
        }
        levels.push(polys);
        index = next_index;
    }
    let family = NestedFamily::new(levels)?;
    let nesting = family.nesting_holds(cfg.nesting_tol);
    let radius_ratios = family.radii.windows(2).map(|w| w[0].0.powf(1.0 + cfg.epsilon) / w[1].1).collect();
    let separation = (0..family.levels.len().saturating_sub(2))
        .map(|k| {
            let grow = family.radii[k + 2].0;
            family.levels[k + 2].iter().all(|j2| {
                let j1 = &family.levels[k + 1][j2.parent.expect("level > 0")];
                let j0 = &family.levels[k][j1.parent.expect("level > 0")];
                inset_distance(&j0.polygon, &j2.polygon) >= grow
            })
        })
        .collect();
    let d = point.len();
    Ok(PlaneReport {
        c: rat_to_f64(&(&point[d - 2] + &point[d - 1])),
        point: point.iter().map(|q| q.to_string()).collect(),
        family,
        nesting,
        radius_ratios,
        separation,
    })
}

/// Sections of the stage simplices by planes of `family` through random
/// points of the run's final simplex.
pub fn build_nested_family(
    run: &ConstructionRun,
    family: &PlaneFamily,
    cfg: &NestedConfig,
) -> Result<NestedReport, AnalysisError> {
    if run.stages.len() < 2 {
        return Err(AnalysisError::Domain("nested families need at least two stages".into()));
    }
    let tree = simplex_tree(run, cfg)?;
    let m = run.matrix();
    let d = run.d();
    let mut rng = substream(cfg.seed, u64::MAX);
    let mut planes = Vec::with_capacity(cfg.planes);
    for _ in 0..cfg.planes {
        let w: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(1..=1000u32))).collect();
        let y: Vec<BigInt> = (0..d).map(|i| (0..d).map(|j| m.get(i, j) * &w[j]).sum()).collect();
        let total: BigInt = y.iter().sum();
        let point = y.into_iter().map(|v| BigRational::new(v, total.clone())).collect();
        planes.push(plane_report(&tree, family, point, cfg)?);
    }
    Ok(NestedReport { config: cfg.clone(), tree_sizes: tree.levels.iter().map(Vec::len).collect(), planes })
}
