use std::path::PathBuf;

use clap::Args;
use iet_core::perm::{rauzy_class_with_budget, special_permutations, PermError, DEFAULT_VERTEX_BUDGET};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, BUDGET};
use crate::output::OutDir;
use crate::paths::resolve_perm;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ClassesArgs {
    /// Number of intervals.
    #[arg(long)]
    pub d: usize,
    /// Starting permutation: hyperelliptic, left, right, or explicit rows.
    #[arg(long, default_value = "hyperelliptic")]
    pub seed_perm: String,
    /// Largest number of vertices to enumerate.
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    seed: String,
    vertices: usize,
    edges: usize,
    /// Every vertex has in- and out-degree two.
    regular: bool,
    /// Membership of the two hubs of the construction, when `d >= 4`.
    contains_left: Option<bool>,
    contains_right: Option<bool>,
}

pub fn run(a: &ClassesArgs) -> Result<(), Failure> {
    if a.d < 2 {
        return Err(Failure::usage("--d must be at least 2"));
    }
    let seed = resolve_perm(&a.seed_perm, a.d)?;
    let g = rauzy_class_with_budget(&seed, a.budget).map_err(|e| match e {
        PermError::BudgetExceeded(_) => Failure::new(BUDGET, e.to_string()),
        e => Failure::usage(e.to_string()),
    })?;
    let ins = g.in_degrees();
    let outs = g.out_degrees();
    let hubs = special_permutations(a.d).ok();
    let summary = Summary {
        seed: seed.to_string(),
        vertices: g.vertices.len(),
        edges: g.edges.len(),
        regular: ins.iter().chain(&outs).all(|&x| x == 2),
        contains_left: hubs.as_ref().map(|h| g.contains(&h.left)),
        contains_right: hubs.as_ref().map(|h| g.contains(&h.right)),
    };

    let mut out = OutDir::create(&a.out)?;
    out.json("class.json", &g)?;
    let hub = |pi: &iet_core::perm::LabeledPermutation| match &hubs {
        Some(h) if *pi == h.left => "left",
        Some(h) if *pi == h.right => "right",
        _ => "",
    };
    out.csv(
        "vertices.csv",
        &["index", "permutation", "in_degree", "out_degree", "hub"],
        g.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), v.to_string(), ins[i].to_string(), outs[i].to_string(), hub(v).to_string()]),
    )?;

    println!("class of {}", summary.seed);
    println!("vertices {}", summary.vertices);
    println!("edges {}", summary.edges);
    println!("every vertex 2-in/2-out: {}", summary.regular);
    if let (Some(l), Some(r)) = (summary.contains_left, summary.contains_right) {
        println!("left hub present: {l}");
        println!("right hub present: {r}");
    }
    out.manifest("classes", a, "ok", &summary)
}
