use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ldp_pointwise::config::{run, Command, Overrides, RunConfig, Status};
use ldp_pointwise::Error;

#[derive(Parser)]
#[command(version, about = "Pointwise large-deviation limits")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated, e.g. 100,1000,10000,100000
    #[arg(long, global = true, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Conjugate of a function
    Transform,
    /// Point case, λ̃ and L'_r(λ+)
    Classify,
    /// Chord-modified measures as CSV
    Generate,
    /// Empirical limit against the target
    Verify,
    /// Rate curve on the derivative range
    Curve,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(input) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Transform => Command::Transform,
        Cmd::Classify => Command::Classify,
        Cmd::Generate => Command::Generate,
        Cmd::Verify => Command::Verify,
        Cmd::Curve => Command::Curve,
    };
    let cfg = RunConfig {
        command,
        input,
        output: cli.out,
        overrides: Overrides {
            n_grid: cli.n_grid,
            depth: cli.depth,
            tol: cli.tol,
        },
    };
    match run(&cfg) {
        Ok(outcome) => {
            if let Some(doc) = outcome.stdout {
                println!("{doc}");
            }
            if !cli.quiet {
                for p in &outcome.written {
                    eprintln!("wrote {}", p.display());
                }
            }
            match outcome.status {
                Status::Pass => ExitCode::SUCCESS,
                Status::Fail => {
                    if !cli.quiet {
                        eprintln!("verification failed");
                    }
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            match &e {
                Error::HypothesisViolated { excluded, .. } => {
                    eprintln!("error: {e}\nexcluded case: {}", excluded.label())
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(2)
        }
    }
}
