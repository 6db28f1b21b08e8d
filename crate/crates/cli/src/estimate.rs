use std::path::PathBuf;

use clap::{Args, ValueEnum};
use iet_core::analysis::{
    box_dimension, build_nested_family, cantor_intervals, frostman_measure, geometric_grid, run_plane_family,
    BallMassReport, BallScanConfig, BoxSet, DimensionFit, NestedConfig, NestedFamily, NestedPolygon,
};
use iet_core::planar::Polygon;
use serde::{Deserialize, Serialize};

use crate::construct::load_run;
use crate::failure::Failure;
use crate::output::{num, OutDir};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    /// Middle-thirds Cantor set.
    Cantor,
    Segment,
    Square,
    /// One-level nested family: the unit square.
    Single,
    /// Nested squares over the product of two Cantor sets.
    CantorProduct,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["manifest", "fixture"]))]
pub struct EstimateArgs {
    /// Manifest written by `construct`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub fixture: Option<Fixture>,
    /// Subdivision depth of the fixtures: 10 for `cantor`, 6 for
    /// `cantor-product`.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Number of box-counting scales for the fixtures.
    #[arg(long, default_value_t = 8)]
    pub scales: usize,
    /// Planes through the run's final simplex.
    #[arg(long, default_value_t = 4)]
    pub planes: usize,
    /// Children drawn per simplex of the nested tree.
    #[arg(long, default_value_t = 3)]
    pub branching: usize,
    /// Ratio between consecutive radii of the scans.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_probes: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct LevelStats {
    level: usize,
    polygons: usize,
    rbar: f64,
    rhat: f64,
    retained: f64,
}

#[derive(Serialize, Default)]
struct PlaneEstimate {
    plane: usize,
    c: Option<f64>,
    nesting: Option<bool>,
    separation: Vec<bool>,
    radius_ratios: Vec<f64>,
    levels: Vec<LevelStats>,
    box_fit: Option<DimensionFit>,
    box_error: Option<String>,
    ball_mass: Option<BallMassReport>,
    ball_error: Option<String>,
}

fn level_stats(f: &NestedFamily) -> Vec<LevelStats> {
    f.levels
        .iter()
        .enumerate()
        .map(|(k, l)| LevelStats {
            level: k + 1,
            polygons: l.len(),
            rbar: f.radii[k].0,
            rhat: f.radii[k].1,
            retained: f.retained[k],
        })
        .collect()
}

fn analyze_family(plane: usize, f: &NestedFamily, a: &EstimateArgs) -> PlaneEstimate {
    let last = f.levels.len() - 1;
    let top = f.radii[last.min(1)].0;
    let bottom = f.radii[last].1;
    let polygons: Vec<Polygon> = f.levels[last].iter().map(|p| p.polygon.clone()).collect();
    let radii = if last == 0 {
        geometric_grid(top * a.ratio.powi(2), top * a.ratio.powi(a.scales as i32 + 2), a.ratio)
    } else {
        geometric_grid(top, bottom, a.ratio)
    };
    let (box_fit, box_error) = match box_dimension(&BoxSet::Polygons(polygons), &radii) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let cfg = BallScanConfig { ratio: a.ratio, max_probes: a.max_probes };
    let (ball_mass, ball_error) = match frostman_measure(f, &cfg) {
        Ok((_, scan)) => (Some(scan), None),
        Err(e) => (None, Some(e.to_string())),
    };
    PlaneEstimate { plane, levels: level_stats(f), box_fit, box_error, ball_mass, ball_error, ..Default::default() }
}

fn fixture(a: &EstimateArgs, kind: Fixture) -> Result<Vec<PlaneEstimate>, Failure> {
    let set = match kind {
        Fixture::Single => {
            let f = NestedFamily::new(vec![vec![NestedPolygon::new(Polygon::rectangle(0.0, 0.0, 1.0, 1.0), None)]])
                .map_err(|e| Failure::usage(e.to_string()))?;
            return Ok(vec![analyze_family(0, &f, a)]);
        }
        Fixture::CantorProduct => {
            let f = NestedFamily::cantor_product(a.levels.unwrap_or(6).max(1));
            return Ok(vec![analyze_family(0, &f, a)]);
        }
        Fixture::Cantor => BoxSet::Intervals(cantor_intervals(a.levels.unwrap_or(10))),
        Fixture::Segment => BoxSet::Intervals(vec![(0.0, 1.0)]),
        Fixture::Square => BoxSet::Polygons(vec![Polygon::rectangle(0.0, 0.0, 1.0, 1.0)]),
    };
    let ratio = if kind == Fixture::Cantor { 1.0 / 3.0 } else { 0.5 };
    let radii = geometric_grid(ratio, ratio.powi(a.scales as i32), ratio);
    let fit = box_dimension(&set, &radii).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(vec![PlaneEstimate { box_fit: Some(fit), ..Default::default() }])
}

fn from_manifest(a: &EstimateArgs, path: &std::path::Path) -> Result<(Vec<PlaneEstimate>, Vec<usize>), Failure> {
    let run = load_run(path)?;
    let family = run_plane_family(&run).map_err(|e| Failure::usage(e.to_string()))?;
    let cfg = NestedConfig { branching: a.branching, planes: a.planes, seed: a.seed, ..Default::default() };
    let report = build_nested_family(&run, &family, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
    let planes = report
        .planes
        .iter()
        .enumerate()
        .map(|(i, p)| PlaneEstimate {
            c: Some(p.c),
            nesting: Some(p.nesting),
            separation: p.separation.clone(),
            radius_ratios: p.radius_ratios.clone(),
            ..analyze_family(i, &p.family, a)
        })
        .collect();
    Ok((planes, report.tree_sizes))
}

pub fn run(a: &EstimateArgs) -> Result<(), Failure> {
    if !(a.ratio > 0.0 && a.ratio < 1.0) {
        return Err(Failure::usage("--ratio must lie in (0, 1)"));
    }
    let (planes, tree_sizes) = match (&a.manifest, a.fixture) {
        (Some(path), _) => from_manifest(a, path)?,
        (None, Some(kind)) => (fixture(a, kind)?, Vec::new()),
        (None, None) => return Err(Failure::usage("one of --manifest or --fixture is required")),
    };

    let mut out = OutDir::create(&a.out)?;
    let mut levels = Vec::new();
    let mut boxes = Vec::new();
    let mut balls = Vec::new();
    for p in &planes {
        for l in &p.levels {
            levels.push(vec![
                p.plane.to_string(),
                l.level.to_string(),
                l.polygons.to_string(),
                num(l.rbar),
                num(l.rhat),
                num(l.retained),
            ]);
        }
        if let Some(f) = &p.box_fit {
            for (r, n) in f.radii.iter().zip(&f.counts) {
                boxes.push(vec![p.plane.to_string(), num(*r), n.to_string()]);
            }
        }
        if let Some(b) = &p.ball_mass {
            for (r, m) in b.radii.iter().zip(&b.sup_mass) {
                balls.push(vec![p.plane.to_string(), num(*r), num(*m)]);
            }
        }
    }
    out.csv("levels.csv", &["plane", "level", "polygons", "rbar", "rhat", "retained"], levels)?;
    out.csv("box_counts.csv", &["plane", "radius", "count"], boxes)?;
    out.csv("ball_mass.csv", &["plane", "radius", "sup_mass"], balls)?;
    out.csv(
        "estimates.csv",
        &["plane", "box_dimension", "ball_mass_exponent"],
        planes.iter().map(|p| {
            vec![
                p.plane.to_string(),
                p.box_fit.as_ref().map(|f| num(f.estimate)).unwrap_or_default(),
                p.ball_mass.as_ref().map(|b| num(b.exponent)).unwrap_or_default(),
            ]
        }),
    )?;
    if !tree_sizes.is_empty() {
        println!("simplex tree sizes {tree_sizes:?}");
    }
    for p in &planes {
        let polys: Vec<usize> = p.levels.iter().map(|l| l.polygons).collect();
        let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "plane {}: polygons per level {:?}, box dimension {}, ball-mass exponent {}",
            p.plane,
            polys,
            fmt(p.box_fit.as_ref().map(|f| f.estimate)),
            fmt(p.ball_mass.as_ref().map(|b| b.exponent)),
        );
    }
    out.json("dimension.json", &serde_json::json!({ "tree_sizes": tree_sizes, "planes": planes }))?;
    out.manifest("estimate-dim", a, "ok", &serde_json::json!({ "planes": planes.len() }))
}
