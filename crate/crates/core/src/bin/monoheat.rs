use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, ValueEnum};

use monoheat::cli::{self, EXIT_CONFIG};
use monoheat::config::{parse_config_with, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    GraphCheck,
    Solve,
    Continuation,
    Convergence,
    Dependence,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::GraphCheck => Command::GraphCheck,
            Cmd::Solve => Command::Solve,
            Cmd::Continuation => Command::Continuation,
            Cmd::Convergence => Command::Convergence,
            Cmd::Dependence => Command::Dependence,
        }
    }
}

/// Solver and verification harness for doubly nonlinear heat equations with
/// monotone boundary flux.
#[derive(Debug, Parser)]
#[command(name = "monoheat", version)]
struct Args {
    /// Command to run; may instead be set by `command = ...` in the config.
    command: Option<Cmd>,
    /// Configuration file. Without one only `graph-check` can run, on the built-in graphs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Reject unknown keys and sections.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => String::new(),
    };
    let config = match parse_config_with(&text, args.command.map(Command::from), args.strict) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    let result = cli::run(&config, &args.out);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
