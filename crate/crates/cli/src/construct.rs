use std::path::PathBuf;

use clap::Args;
use iet_core::construction::{
    check_angle_monotonicity, check_condition_double_star, check_conditions_star, check_size_recursions, make_schedule,
    restriction_columns_invariant, run_construction, ConstructionConfig, ConstructionError, ConstructionRun,
    DoubleStarReport, ExponentMap, LimitCell, MonotoneReport, Schedule, SizeReport, StageTrace, StarReport,
};
use iet_core::matrix::big_log10;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, STAGE};
use crate::output::{num, opt, OutDir};

pub const RUN_FILE: &str = "run.json";

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub k0: u32,
    /// Exponent map: `desk`, `original`, a polynomial for the major exponent,
    /// or `major=...;minor=...;slack=...;free=...`.
    #[arg(long, default_value = "desk")]
    pub scale: String,
    #[arg(long, default_value_t = 3)]
    pub stages: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Balance constant of the left and right freedom checks.
    #[arg(long, default_value_t = 4.0)]
    pub zeta: f64,
    /// Largest number of Rauzy steps one generated phase may take.
    #[arg(long, default_value_t = 1_000_000)]
    pub step_budget: usize,
    /// Threshold of the double-star angle test.
    #[arg(long, default_value_t = 1.0)]
    pub angle_c: f64,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PhaseSummary {
    phase: String,
    steps: String,
    log10_norm: f64,
    widened: bool,
}

#[derive(Serialize)]
struct StageSummary {
    k: usize,
    norm: String,
    log10_norm: f64,
    phases: Vec<PhaseSummary>,
    first_vertex: Vec<f64>,
    last_vertex: Vec<f64>,
}

#[derive(Serialize)]
struct Conditions {
    grammar: Result<(), String>,
    star: Vec<StarReport>,
    star_passed: bool,
    double_star: Vec<DoubleStarReport>,
    sizes: Vec<SizeReport>,
    monotone: MonotoneReport,
    restriction_invariant: bool,
}

#[derive(Serialize)]
struct Results<'a> {
    seed: u64,
    schedule: &'a Schedule,
    stages: Vec<StageSummary>,
    conditions: Option<Conditions>,
    limit: Option<&'a LimitCell>,
    clusters_separated: Option<bool>,
    failure: Option<String>,
    run_file: Option<&'static str>,
}

fn summarize(s: &StageTrace) -> StageSummary {
    StageSummary {
        k: s.k,
        norm: s.cumulative.norm().to_string(),
        log10_norm: big_log10(&s.cumulative.norm()),
        phases: s
            .phases
            .iter()
            .map(|p| PhaseSummary {
                phase: p.phase.to_string(),
                steps: p.steps().to_string(),
                log10_norm: big_log10(&p.norm()),
                widened: p.widened,
            })
            .collect(),
        first_vertex: s.stats.first_vertex.clone(),
        last_vertex: s.stats.last_vertex.clone(),
    }
}

fn conditions(run: &ConstructionRun, angle_c: f64) -> Conditions {
    let star = check_conditions_star(&run.stages, run.config.zeta);
    Conditions {
        grammar: run.verify(),
        star_passed: star.iter().all(|r| r.passed()),
        star,
        double_star: check_condition_double_star(&run.stages, angle_c),
        sizes: check_size_recursions(&run.stages),
        monotone: check_angle_monotonicity(&run.stages),
        restriction_invariant: restriction_columns_invariant(&run.stages),
    }
}

fn stage_rows(stages: &[StageTrace], movement: &[f64]) -> Vec<Vec<String>> {
    stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let a = &s.stats.angles;
            let moved = if i == 0 { None } else { movement.get(i - 1).copied() };
            vec![
                s.k.to_string(),
                num(big_log10(&s.cumulative.norm())),
                num(a.first_to_span),
                num(a.last_to_span),
                num(a.first_spread),
                num(a.last_spread),
                num(a.inter),
                opt(moved),
                opt(s.stats.ratio_a),
                num(s.stats.ratio_a_prime_t),
                num(s.stats.ratio_b),
                num(s.stats.ratio_b_prime),
            ]
        })
        .collect()
}

const STAGE_HEADER: [&str; 12] = [
    "k",
    "log10_norm",
    "first_to_span",
    "last_to_span",
    "first_spread",
    "last_spread",
    "inter",
    "movement",
    "ratio_a",
    "ratio_a_prime_t",
    "ratio_b",
    "ratio_b_prime",
];

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn print_conditions(c: &Conditions) {
    let count = |f: &dyn Fn(&StarReport) -> bool| c.star.iter().filter(|r| f(r)).count();
    let n = c.star.len();
    println!("phase grammar: {}", mark(c.grammar.is_ok()));
    let lines: [(&str, &dyn Fn(&StarReport) -> bool); 4] = [
        ("(1) A_k balanced", &|r| r.a_balanced),
        ("(2) A'_k T_k ratio", &|r| r.a_prime_t_ok),
        ("(3) B_k balanced", &|r| r.b_balanced),
        ("(4) B'_k ratio", &|r| r.b_prime_ok),
    ];
    for (name, f) in lines {
        let k = count(f);
        println!("condition * {name}: {} ({k}/{n})", mark(k == n));
    }
    let ds = c.double_star.iter().filter(|r| r.first_ok && r.last_ok).count();
    println!("condition ** angles: {} ({ds}/{})", mark(ds == c.double_star.len()), c.double_star.len());
    println!("restriction columns invariant: {}", mark(c.restriction_invariant));
    println!("first-block angles non-increasing: {}", mark(c.monotone.first_ok));
    println!("last-block angles non-increasing: {}", mark(c.monotone.last_ok));
}

pub fn run(a: &ConstructArgs) -> Result<(), Failure> {
    let scale = ExponentMap::parse(&a.scale).map_err(|e| Failure::usage(e.to_string()))?;
    let schedule = make_schedule(a.k0, scale, a.stages).map_err(|e| Failure::usage(e.to_string()))?;
    let mut config = ConstructionConfig { zeta: a.zeta, ..ConstructionConfig::new(a.d) };
    config.generator.step_budget = a.step_budget;
    let mut out = OutDir::create(&a.out)?;
    let run = match run_construction(&schedule, &config, a.seed) {
        Ok(r) => r,
        Err(ConstructionError::Stage { k, phase, source, partial }) => {
            let message = format!("stage {k}, {phase}: {source}");
            out.csv("stages.csv", &STAGE_HEADER, stage_rows(&partial, &[]))?;
            let results = Results {
                seed: a.seed,
                schedule: &schedule,
                stages: partial.iter().map(summarize).collect(),
                conditions: None,
                limit: None,
                clusters_separated: None,
                failure: Some(message.clone()),
                run_file: None,
            };
            out.manifest("construct", a, "failed", &results)?;
            return Err(Failure::new(STAGE, message));
        }
        Err(e) => return Err(Failure::usage(e.to_string())),
    };

    let cond = conditions(&run, a.angle_c);
    out.json(RUN_FILE, &run)?;
    out.csv("stages.csv", &STAGE_HEADER, stage_rows(&run.stages, &run.limit.movement))?;
    println!("{:>3} {:>10} {:>12} {:>12} {:>12} {:>12}", "k", "log10|M|", "first", "last", "inter", "movement");
    for (i, s) in run.stages.iter().enumerate() {
        let a = &s.stats.angles;
        let moved = if i == 0 { "".to_string() } else { format!("{:.3e}", run.limit.movement[i - 1]) };
        println!(
            "{:>3} {:>10.2} {:>12.3e} {:>12.3e} {:>12.3e} {:>12}",
            s.k,
            big_log10(&s.cumulative.norm()),
            a.first_spread,
            a.last_spread,
            a.inter,
            moved
        );
    }
    print_conditions(&cond);
    let l = &run.limit;
    println!(
        "limit cell: first spread {:.3e}, last spread {:.3e}, inter {:.4}, separated {}, converged {}",
        l.first_spread,
        l.last_spread,
        l.inter,
        l.clusters_separated(),
        l.converged
    );
    let results = Results {
        seed: a.seed,
        schedule: &run.schedule,
        stages: run.stages.iter().map(summarize).collect(),
        clusters_separated: Some(run.limit.clusters_separated()),
        conditions: Some(cond),
        limit: Some(&run.limit),
        failure: None,
        run_file: Some(RUN_FILE),
    };
    out.manifest("construct", a, "ok", &results)
}

/// Loads the run written next to a `construct` manifest.
pub fn load_run(manifest: &std::path::Path) -> Result<ConstructionRun, Failure> {
    let m = crate::output::read_manifest(manifest)?;
    if m.command != "construct" || m.status != "ok" {
        return Err(Failure::usage(format!("{} is not a completed construct manifest", manifest.display())));
    }
    let path = manifest.parent().map(PathBuf::from).unwrap_or_default().join(RUN_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let run: ConstructionRun = serde_json::from_str(&text)?;
    run.verify().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(run)
}
