use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pharm::cli::{exit_code, parse_config, run, EXIT_CONFIG, EXIT_IO};

#[derive(Parser)]
#[command(
    name = "pharm",
    version,
    about = "p-harmonic exterior problems: solve, verify, classify"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a solve-radial or solve-2d configuration.
    Solve(RunArgs),
    /// Run a verify-caccioppoli or verify-decay configuration.
    Verify(RunArgs),
    /// Run a classify configuration.
    Classify(RunArgs),
    /// Run an oracle-compare configuration.
    Oracle(RunArgs),
    /// Run a constants configuration.
    Constants(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Root directory for run artifacts; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match &cli.verb {
        Verb::Solve(a) => ("solve", a),
        Verb::Verify(a) => ("verify", a),
        Verb::Classify(a) => ("classify", a),
        Verb::Oracle(a) => ("oracle", a),
        Verb::Constants(a) => ("constants", a),
    };
    ExitCode::from(dispatch(verb, args) as u8)
}

fn dispatch(verb: &str, args: &RunArgs) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return EXIT_IO;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors.0 {
                eprintln!("config: {e}");
            }
            return EXIT_CONFIG;
        }
    };
    if cfg.kind.verb() != verb {
        eprintln!(
            "config: kind {} runs under `pharm {}`, not `pharm {verb}`",
            cfg.kind.name(),
            cfg.kind.verb()
        );
        return EXIT_CONFIG;
    }
    let root = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    match run(&cfg, &root) {
        Ok((dir, art)) => {
            println!("{}", dir.display());
            for f in &art.report.failures {
                eprintln!("check failed: {f}");
            }
            art.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
