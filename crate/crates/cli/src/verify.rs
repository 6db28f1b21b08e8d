use std::path::PathBuf;

use clap::{Args, ValueEnum};
use iet_core::analysis::{mc_jacobian_pushforward, prob_decay_sim, DecayConfig, Dependence, Verdict};
use iet_core::geometry::{
    ball_section_fraction, concavity_test, random_simplex, simplex_volume_fraction, vertex_simplex_fraction, Body,
    ConcavityConfig,
};
use iet_core::matrix::rat;
use iet_core::perm::{hyperelliptic_permutation, rauzy_class};
use iet_core::sampling::substream;
use iet_core::symplectic::{reciprocal_pairing, verify_invariance};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, VIOLATED};
use crate::output::{num, OutDir};
use crate::paths::{parse_count, random_path};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Symplectic,
    Volume,
    Jacobian,
    Probdecay,
    Concavity,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    pub suite: Suite,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Random paths or matrices drawn by the exact suites.
    #[arg(long, default_value = "1000", value_parser = parse_count)]
    pub paths: u64,
    /// Longest random path.
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    /// Monte Carlo samples per estimate.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Success probability of the simulated flips.
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    /// Random polytopes of the concavity suite.
    #[arg(long, default_value_t = 50)]
    pub bodies: usize,
    /// Constant of the `C sqrt(eps)` bound.
    #[arg(long, default_value_t = 10.0)]
    pub c_bound: f64,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
}

/// One line of the report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl Check {
    fn exact(name: impl Into<String>, failures: usize) -> Self {
        let verdict = if failures == 0 { Verdict::Consistent } else { Verdict::Violated };
        Self { name: name.into(), estimate: failures as f64, stderr: 0.0, bound: 0.0, verdict }
    }
}

#[derive(Serialize)]
struct Report {
    checks: Vec<Check>,
    details: serde_json::Value,
    violated: bool,
}

fn class_members(d: usize) -> Result<Vec<iet_core::perm::LabeledPermutation>, Failure> {
    let pi = hyperelliptic_permutation(d).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(rauzy_class(&pi).map_err(|e| Failure::usage(e.to_string()))?.vertices)
}

fn symplectic(a: &VerifyArgs) -> Result<(Vec<Check>, serde_json::Value), Failure> {
    let class = class_members(a.d)?;
    let mut rng = substream(a.seed, 0);
    let mut failures = 0;
    for _ in 0..a.paths {
        let start = &class[rng.gen_range(0..class.len())];
        let len = rng.gen_range(1..=a.length.max(1));
        let (m, end) = random_path(start, len, &mut rng);
        if !verify_invariance(m.as_matrix(), start, &end).map_err(|e| Failure::usage(e.to_string()))? {
            failures += 1;
        }
    }
    let pairing_paths = a.paths.min(100);
    let mut defects = Vec::new();
    for _ in 0..pairing_paths {
        let start = &class[rng.gen_range(0..class.len())];
        let (m, end) = random_path(start, 30, &mut rng);
        let r = reciprocal_pairing(m.as_matrix(), start, &end).map_err(|e| Failure::usage(e.to_string()))?;
        defects.push(r.defect);
    }
    let worst = defects.iter().copied().fold(0.0, f64::max);
    let pairing = Check {
        name: "reciprocal pairing defect".into(),
        estimate: worst,
        stderr: 0.0,
        bound: 1e-8,
        verdict: if worst < 1e-8 { Verdict::Consistent } else { Verdict::Violated },
    };
    let details = serde_json::json!({ "paths": a.paths, "pairing_paths": pairing_paths, "defects": defects });
    Ok((vec![Check::exact("invariance failures", failures), pairing], details))
}

fn volume(a: &VerifyArgs) -> Result<(Vec<Check>, serde_json::Value), Failure> {
    let class = class_members(a.d)?;
    let mut rng = substream(a.seed, 1);
    let mut failures = 0;
    for _ in 0..a.paths {
        let start = &class[rng.gen_range(0..class.len())];
        let len = rng.gen_range(0..=a.length);
        let (m, _) = random_path(start, len, &mut rng);
        let m = m.as_matrix();
        let formula = simplex_volume_fraction(m).map_err(|e| Failure::usage(e.to_string()))?;
        let vertices: Vec<Vec<BigRational>> = (0..a.d)
            .map(|j| {
                let col = m.column(j);
                let s: BigInt = col.iter().sum();
                col.into_iter().map(|x| BigRational::new(x, s.clone())).collect()
            })
            .collect();
        if formula != vertex_simplex_fraction(&vertices) {
            failures += 1;
        }
    }
    Ok((vec![Check::exact("volume mismatches", failures)], serde_json::json!({ "matrices": a.paths })))
}

fn jacobian(a: &VerifyArgs) -> Result<(Vec<Check>, serde_json::Value), Failure> {
    let pi = hyperelliptic_permutation(a.d).map_err(|e| Failure::usage(e.to_string()))?;
    let mut rng = substream(a.seed, 2);
    let (m, _) = random_path(&pi, a.length.min(12), &mut rng);
    // the half of the simplex where x_1 >= x_2
    let d = a.d;
    let unit = |i: usize| (0..d).map(|j| rat(i64::from(i == j), 1)).collect::<Vec<_>>();
    let mut w: Vec<Vec<BigRational>> = (0..d).map(unit).collect();
    w[1] = (0..d).map(|j| rat(i64::from(j < 2), 2)).collect();
    let r = mc_jacobian_pushforward(m.as_matrix(), &w, a.samples as usize, a.seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let check = Check {
        name: "pushforward share".into(),
        estimate: r.estimate,
        stderr: r.stderr,
        bound: r.claim_bound,
        verdict: r.verdict,
    };
    let details = serde_json::json!({ "matrix": m.as_matrix(), "report": r });
    Ok((vec![check], details))
}

fn probdecay(a: &VerifyArgs) -> Result<(Vec<Check>, serde_json::Value), Failure> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (i, dep) in [Dependence::Independent, Dependence::AdversarialMarkov].into_iter().enumerate() {
        let cfg = DecayConfig {
            rho: a.rho,
            dependence: dep,
            length: 40,
            window_start: 5,
            epsilon: a.rho / 2.0,
            samples: a.samples as usize,
            seed: a.seed + i as u64,
        };
        let r = prob_decay_sim(&cfg).map_err(|e| Failure::usage(e.to_string()))?;
        let name = match dep {
            Dependence::Independent => "independent",
            Dependence::AdversarialMarkov => "adversarial",
        };
        for (l, w) in r.windows.iter().enumerate() {
            checks.push(Check {
                name: format!("{name} window {}", l + 1),
                estimate: w.estimate,
                stderr: w.stderr,
                bound: w.claim_bound,
                verdict: w.verdict,
            });
        }
        reports.push(r);
    }
    Ok((checks, serde_json::to_value(&reports)?))
}

fn concavity(a: &VerifyArgs) -> Result<(Vec<Check>, serde_json::Value), Failure> {
    let mut rng = substream(a.seed, 4);
    let mut dir = || -> [f64; 4] { std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
    let (u, v) = (dir(), dir());
    let mut rng = substream(a.seed, 5);
    let bodies: Vec<Body> = (0..a.bodies).map(|_| random_simplex(&mut rng)).collect();
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for eps in [1e-2, 1e-4] {
        let cfg = ConcavityConfig { samples: a.samples as usize, c_bound: a.c_bound, seed: a.seed, ..Default::default() };
        let mut worst: f64 = 0.0;
        let mut outside = 0;
        for b in &bodies {
            let r = concavity_test(b, &u, &v, eps, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
            worst = worst.max(r.fraction / eps.sqrt());
            outside += usize::from(!r.within_bound);
            reports.push(r);
        }
        checks.push(Check {
            name: format!("max fraction/sqrt(eps) at eps {eps}"),
            estimate: worst,
            stderr: 0.0,
            bound: a.c_bound,
            verdict: if outside == 0 { Verdict::Consistent } else { Verdict::Violated },
        });
        let ball = Body::Ball { center: [0.0; 4], radius: 1.0 };
        let r = concavity_test(&ball, &u, &v, eps, &cfg).map_err(|e| Failure::usage(e.to_string()))?;
        let p = ball_section_fraction(eps);
        let se = (p * (1.0 - p) / cfg.samples.max(1) as f64).sqrt();
        checks.push(Check {
            name: format!("ball fraction at eps {eps}"),
            estimate: r.fraction,
            stderr: se,
            bound: p,
            verdict: if (r.fraction - p).abs() <= 3.0 * se { Verdict::Consistent } else { Verdict::Violated },
        });
        reports.push(r);
    }
    let details = serde_json::json!({ "u": u, "v": v, "reports": reports });
    Ok((checks, details))
}

pub fn run(a: &VerifyArgs) -> Result<(), Failure> {
    if a.d < 2 {
        return Err(Failure::usage("--d must be at least 2"));
    }
    let (checks, details) = match a.suite {
        Suite::Symplectic => symplectic(a)?,
        Suite::Volume => volume(a)?,
        Suite::Jacobian => jacobian(a)?,
        Suite::Probdecay => probdecay(a)?,
        Suite::Concavity => concavity(a)?,
    };
    let violated = checks.iter().any(|c| c.verdict == Verdict::Violated);
    let mut out = OutDir::create(&a.out)?;
    out.csv(
        "report.csv",
        &["check", "estimate", "stderr", "bound", "verdict"],
        checks.iter().map(|c| {
            vec![c.name.clone(), num(c.estimate), num(c.stderr), num(c.bound), verdict_str(c.verdict).to_string()]
        }),
    )?;
    for c in &checks {
        println!("{}: {} (bound {}) {}", c.name, num(c.estimate), num(c.bound), verdict_str(c.verdict));
    }
    let suite = serde_json::to_value(a.suite)?;
    let name = suite.as_str().unwrap_or_default().to_string();
    let report = Report { checks, details, violated };
    out.json("report.json", &report)?;
    out.manifest("verify", a, if violated { "violated" } else { "ok" }, &serde_json::json!({ "suite": name, "violated": violated }))?;
    if violated {
        return Err(Failure::new(VIOLATED, format!("suite {name}: at least one verdict is violated")));
    }
    Ok(())
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Consistent => "consistent",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}
