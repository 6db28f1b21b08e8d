//! `iet`: batch front end for enumeration, induction, construction,
//! verification and dimension estimates. Every command writes a
//! `manifest.json` echoing its resolved flags, so a run can be repeated with
//! `iet rerun --manifest`.

mod classes;
mod construct;
mod estimate;
mod failure;
mod induct;
mod output;
mod paths;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "iet", version, about = "Rauzy-Veech induction and staged constructions of interval exchanges")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate a Rauzy class.
    Classes(classes::ClassesArgs),
    /// Run Rauzy-Veech induction on rational lengths.
    Induct(induct::InductArgs),
    /// Run the staged construction.
    Construct(construct::ConstructArgs),
    /// Run one of the verification suites.
    Verify(verify::VerifyArgs),
    /// Nested polygon families and dimension estimates.
    EstimateDim(estimate::EstimateArgs),
    /// Repeat the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Classes(a) => classes::run(&a),
        Command::Induct(a) => induct::run(&a),
        Command::Construct(a) => construct::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::EstimateDim(a) => estimate::run(&a),
        Command::Rerun { manifest, out } => rerun(&manifest, out),
    }
}

fn rerun(path: &std::path::Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let manifest = output::read_manifest(path)?;
    let out = out.unwrap_or_else(|| path.parent().map(PathBuf::from).unwrap_or_default());
    let config = manifest.config;
    let parse = |e: serde_json::Error| Failure::usage(format!("{}: bad config: {e}", path.display()));
    let command = match manifest.command.as_str() {
        "classes" => Command::Classes(classes::ClassesArgs { out, ..serde_json::from_value(config).map_err(parse)? }),
        "induct" => Command::Induct(induct::InductArgs { out, ..serde_json::from_value(config).map_err(parse)? }),
        "construct" => {
            Command::Construct(construct::ConstructArgs { out, ..serde_json::from_value(config).map_err(parse)? })
        }
        "verify" => Command::Verify(verify::VerifyArgs { out, ..serde_json::from_value(config).map_err(parse)? }),
        "estimate-dim" => {
            let mut a: estimate::EstimateArgs = serde_json::from_value(config).map_err(parse)?;
            // the recorded manifest path is relative to the original working directory
            a.out = out;
            Command::EstimateDim(a)
        }
        other => return Err(Failure::usage(format!("{}: unknown command {other:?}", path.display()))),
    };
    dispatch(command)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(failure::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
