//! Command-line workflows for recourse-aware scoring, explanation, and audit
//! of tabular classifiers.
//!
//! The binary exposes four subcommands:
//!
//! - `score`: per-feature responsiveness for every denied row;
//! - `explain`: ranked feature listings by one method, with certified triage
//!   when the method is responsiveness;
//! - `audit`: dataset-level comparison of explanation methods against
//!   responsiveness ground truth;
//! - `samplesize`: the number of accepted draws needed for a target
//!   confidence-interval half-width.
//!
//! Reports are deterministic JSON: identical inputs, flags, and seed produce
//! byte-identical documents. Exit codes: 0 on success, 2 for invalid inputs
//! or flags, 3 when a computation exceeds its resource budget.

pub mod cache;
pub mod commands;
pub mod report;

use std::path::Path;

use clap::{Parser, Subcommand};
use recourse_core::Result;

#[derive(Parser, Debug)]
#[command(
    name = "recourse",
    version,
    about = "Responsiveness scoring, recourse-aware explanations, and audits for tabular classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score per-feature responsiveness for denied rows
    Score(commands::ScoreArgs),
    /// Rank features for denied rows by a chosen explanation method
    Explain(commands::ExplainArgs),
    /// Compare explanation methods against responsiveness over a dataset
    Audit(commands::AuditArgs),
    /// Plan the sample size for a target interval half-width
    Samplesize(commands::SampleSizeArgs),
}

/// Run a parsed invocation and return the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_resource_exhaustion() {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Score(args) => emit(&commands::cmd_score(args)?, args.run.out.as_deref()),
        Command::Explain(args) => emit(&commands::cmd_explain(args)?, args.run.out.as_deref()),
        Command::Audit(args) => emit(&commands::cmd_audit(args)?, args.run.out.as_deref()),
        Command::Samplesize(args) => {
            let report = commands::cmd_samplesize(args)?;
            println!("{}", report.n);
            if let Some(out) = &args.out {
                write_text(out, &render(&report)?)?;
            }
            Ok(())
        }
    }
}

/// Serialize a report the way every command does: pretty JSON plus a
/// trailing newline.
pub fn render<T: serde::Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

fn emit<T: serde::Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let text = render(report)?;
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
