//! Command line front end for `poisson-recursion`: JSON problem files in,
//! JSON reports out, with a fixed exit-code contract
//! (0 pass, 1 mathematical refusal or failure, 2 input or usage error).

pub mod commands;
pub mod json;
pub mod report;
pub mod sampling;
pub mod spec;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::CliError;
pub use spec::{load_spec, parse_spec, ProblemSpec, SpecError};

#[derive(Debug, Parser)]
#[command(
    name = "poisrec",
    version,
    about = "Recursion operators between regular Poisson bivectors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Decide whether a recursion operator exists on the samples.
    Check(CommonArgs),
    /// Decide, then construct R and R* at every sample.
    Build(CommonArgs),
    /// Check the candidate "R" of the problem file against w and w'.
    Verify(CommonArgs),
    /// Leafwise symplectic matrices of both structures.
    Leafwise(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Problem file (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rank threshold, relative to the largest column norm [file or 1e-9].
    #[arg(long, value_name = "TOL")]
    pub tol_rank: Option<f64>,
    /// Largest subspace defect counted as coincident [file or 1e-8].
    #[arg(long, value_name = "TOL")]
    pub tol_subspace: Option<f64>,
    /// Jacobi and recursion-identity residual threshold [file or 1e-8].
    #[arg(long, value_name = "TOL")]
    pub tol_residual: Option<f64>,
    /// Worker threads; output does not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Check(a) | Command::Build(a) | Command::Verify(a) | Command::Leafwise(a) => a,
        }
    }
}

/// Applies command-line tolerance overrides on top of the file values.
pub fn apply_overrides(spec: &mut ProblemSpec, args: &CommonArgs) -> Result<(), CliError> {
    for (flag, value, slot) in [
        ("--tol-rank", args.tol_rank, &mut spec.tolerances.rank),
        ("--tol-subspace", args.tol_subspace, &mut spec.tolerances.subspace),
        ("--tol-residual", args.tol_residual, &mut spec.tolerances.residual),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!("{flag} must be a positive finite number")));
            }
            *slot = v;
        }
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(())
}

/// Runs one command and returns the exit code with the serialized report.
pub fn execute(command: &Command) -> Result<(i32, String), CliError> {
    let args = command.args();
    let mut spec = load_spec(&args.spec)?;
    apply_overrides(&mut spec, args)?;
    let pool = commands::thread_pool(args.jobs)?;
    Ok(match command {
        Command::Check(_) => {
            let r = commands::run_check(&spec, &pool)?;
            warn_skipped(&r.existence.skipped);
            (r.existence.exit_code(), json::to_string(&r))
        }
        Command::Build(_) => {
            let r = commands::run_build(&spec, &pool)?;
            warn_skipped(&r.existence.skipped);
            (r.existence.exit_code(), json::to_string(&r))
        }
        Command::Verify(_) => {
            let r = commands::run_verify(&spec, &pool)?;
            warn_skipped(&r.skipped);
            (r.exit_code(), json::to_string(&r))
        }
        Command::Leafwise(_) => {
            let r = commands::run_leafwise(&spec, &pool)?;
            warn_skipped(&r.existence.skipped);
            (r.existence.exit_code(), json::to_string(&r))
        }
    })
}

fn warn_skipped(skipped: &[report::SkippedOut]) {
    for s in skipped {
        eprintln!("warning: skipped sample {} {:?}: {}", s.index, s.point, s.reason);
    }
}

/// [`execute`] plus output handling; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(&cli.command).and_then(|(code, text)| {
        match &cli.command.args().out {
            Some(path) => fs::write(path, &text).map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            })?,
            None => print!("{text}"),
        }
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
