//! asympair: difference-equation asymptotics from the command line.
//!
//! Exit codes: 0 success (and no rejected membership assertion), 2 usage or
//! invalid parameters, 3 parse errors (DSL, space or CSV), 4 evaluation
//! domain errors, 5 failed verification (NotInSpace where membership was
//! asserted, failed pair or bound checks, refused certification), 6
//! convergence or truncation failure.

mod commands;
mod csvio;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use asympair::Error;
use commands::{
    cmd_classify, cmd_construct, cmd_pairs, cmd_solve, cmd_verify, ClassifyArgs, ConstructArgs,
    PairsArgs, SolveArgs, VerifyArgs,
};
use report::Report;

#[derive(Parser)]
#[command(
    name = "asympair",
    version,
    about = "Asymptotic analysis of difference equations: classification into summability \
             spaces, forward solving, prescribed-asymptotics construction, equivalence \
             verification and the difference-pair catalog"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Classify sequences against a summability or growth space.
    Classify(ClassifyArgs),
    /// Solve the recurrence forward from initial values.
    Solve(SolveArgs),
    /// Construct a solution with prescribed asymptotic behavior.
    Construct(ConstructArgs),
    /// Verify that two sequences are asymptotically equivalent modulo Z.
    Verify(VerifyArgs),
    /// Inspect the difference-pair catalog; optionally check an instance.
    Pairs(PairsArgs),
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 3,
        Error::Eval { .. } | Error::FnDomain { .. } | Error::BinomialOverflow { .. } => 4,
        Error::InvalidParameter(_) | Error::IndexRange(_) | Error::Unsupported(_) => 2,
        Error::TailUnsupported(_)
        | Error::TailViolated(_)
        | Error::UncertifiedRefused(_)
        | Error::Precondition(_) => 5,
        Error::Convergence(_) | Error::Diverging(_) | Error::TruncationUnreachable(_) => 6,
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome: Result<(Report, i32), Error> = match &cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Construct(args) => cmd_construct(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Pairs(args) => cmd_pairs(args),
    };
    match outcome {
        Ok((mut report, code)) => {
            report.wall_ms = started.elapsed().as_millis() as u64;
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, report.to_json()) {
                    eprintln!("error: cannot write report to {}: {e}", path.display());
                    std::process::exit(1);
                }
            }
            match cli.format {
                Format::Human => print!("{}", report.render_human()),
                Format::Json => println!("{}", report.to_json()),
            }
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
