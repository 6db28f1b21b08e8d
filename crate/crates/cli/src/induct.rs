use std::path::PathBuf;

use clap::Args;
use iet_core::induction::{induct, induct_until, Iet, InductionError, InductionTrace, StopRule, DEFAULT_STEP_BUDGET};
use iet_core::matrix::{format_rational, parse_rational};
use iet_core::perm::LabeledPermutation;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, BUDGET, UNDEFINED};
use crate::output::OutDir;
use crate::paths::resolve_perm;

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("stop").required(true).args(["steps", "until"]))]
pub struct InductArgs {
    /// Comma-separated rational lengths such as `2/3,1/3`.
    #[arg(long)]
    pub lengths: String,
    /// `s` (or `sD`), `left`, `right`, `pre`, or explicit rows `1 2/2 1`.
    #[arg(long, default_value = "s")]
    pub perm: String,
    /// Exact number of steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// `balanced:Z`, `norm:N`, `maximal:N`, `positive`, or `perm:TOP/BOTTOM`.
    #[arg(long)]
    pub until: Option<String>,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_rule(s: &str, d: usize) -> Result<StopRule, Failure> {
    let bad = || Failure::usage(format!("bad stopping rule {s:?}"));
    let (key, value) = s.split_once(':').unwrap_or((s, ""));
    let big = |v: &str| v.trim().parse::<BigInt>().map_err(|_| bad());
    Ok(match key.trim() {
        "balanced" => {
            let z: f64 = value.trim().parse().map_err(|_| bad())?;
            if !(z >= 1.0) {
                return Err(bad());
            }
            StopRule::Balanced(z)
        }
        "norm" => StopRule::NormAtLeast(big(value)?),
        "maximal" => StopRule::MaximalFor(big(value)?),
        "positive" => StopRule::Positive,
        "perm" => StopRule::Permutation(resolve_perm(value, d)?),
        _ => return Err(bad()),
    })
}

#[derive(Serialize)]
struct Outcome {
    steps: usize,
    final_norm: String,
    balance_ratio: f64,
    permutation: LabeledPermutation,
    induced_lengths: Vec<String>,
    /// Step at which the two last intervals had equal length.
    undefined_at: Option<usize>,
}

fn write(out: &mut OutDir, trace: &InductionTrace) -> Result<(), Failure> {
    out.json("trace.json", &trace.to_record())?;
    let edges = trace.edges();
    out.csv(
        "moves.csv",
        &["step", "winner", "loser", "side", "permutation"],
        edges.iter().enumerate().map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                e.winner.to_string(),
                e.loser.to_string(),
                e.side.as_str().to_string(),
                e.target.to_string(),
            ]
        }),
    )
}

pub fn run(a: &InductArgs) -> Result<(), Failure> {
    let lengths: Vec<_> = a
        .lengths
        .split(',')
        .map(|s| parse_rational(s).map_err(Failure::usage))
        .collect::<Result<_, _>>()?;
    let d = lengths.len();
    let pi = resolve_perm(&a.perm, d)?;
    let t = Iet::new(lengths, pi).map_err(|e| Failure::usage(e.to_string()))?;
    let result = match (&a.steps, &a.until) {
        (Some(n), _) => induct(&t, *n),
        (None, Some(rule)) => induct_until(&t, &parse_rule(rule, d)?, a.budget),
        (None, None) => return Err(Failure::usage("one of --steps or --until is required")),
    };
    let (trace, failure) = match result {
        Ok(tr) => (tr, None),
        Err(InductionError::Undefined { step, partial }) => {
            let msg = format!("induction undefined at step {step}: the two last intervals have equal length");
            (*partial, Some((Failure::new(UNDEFINED, msg), Some(step))))
        }
        Err(InductionError::Budget { budget, partial }) => {
            (*partial, Some((Failure::new(BUDGET, format!("step budget {budget} exhausted")), None)))
        }
        Err(e) => return Err(Failure::usage(e.to_string())),
    };

    let mut out = OutDir::create(&a.out)?;
    write(&mut out, &trace)?;
    let record = trace.to_record();
    let outcome = Outcome {
        steps: trace.len(),
        final_norm: record.final_norm.clone(),
        balance_ratio: record.balance_ratio,
        permutation: trace.induced.perm().clone(),
        induced_lengths: trace.induced.lengths().iter().map(format_rational).collect(),
        undefined_at: failure.as_ref().and_then(|f| f.1),
    };
    for (i, e) in trace.edges().iter().enumerate().take(20) {
        println!("step {}: winner {} loser {} ({})", i + 1, e.winner, e.loser, e.side.as_str());
    }
    if trace.len() > 20 {
        println!("... {} steps", trace.len());
    }
    println!("final norm {}", outcome.final_norm);
    println!("balance ratio {}", outcome.balance_ratio);
    println!("permutation {}", outcome.permutation);
    println!("lengths {}", outcome.induced_lengths.join(","));
    let status = if failure.is_some() { "failed" } else { "ok" };
    out.manifest("induct", a, status, &outcome)?;
    match failure {
        Some((f, _)) => Err(f),
        None => Ok(()),
    }
}
