//! Configuration-driven front end: parse a TOML run description, execute it,
//! write `report.json` plus the CSV traces into one output directory.

mod config;
mod run;

use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

pub use config::{parse_config, parse_config_with, Mode, Overrides, RunConfig};
pub use run::{initial_curve, initial_sweepout, run, RunOutcome, CHECKS_FILE, CURVE_FILE, REPORT_FILE, TRACE_FILE};

use crate::error::{Error, Result};
use crate::geometry::SpaceKind;

#[derive(Clone, Debug, Parser)]
#[command(
    name = "catk",
    version,
    about = "Birkhoff curve shortening and width sweepouts on model surfaces"
)]
pub struct Args {
    /// TOML run description; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// sphere, euclidean, hyperbolic or flat_torus.
    #[arg(long)]
    pub space: Option<SpaceKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub curvature: Option<f64>,
    /// Break count of the built-in initial curve.
    #[arg(long)]
    pub breaks: Option<usize>,
    #[arg(long)]
    pub slices: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated band fractions of the width.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing output directory.
    #[arg(long)]
    pub force: bool,
}

impl Args {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode,
            space: self.space,
            curvature: self.curvature,
            breaks: self.breaks,
            slices: self.slices,
            sweeps: self.sweeps,
            tol: self.tol,
            delta: self.delta.clone(),
            seed: self.seed,
            out: self.out.clone(),
        }
    }

    pub fn load(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        parse_config_with(&text, &self.overrides())
    }
}

/// `{kind, error}` as printed on failure.
pub fn error_json(e: &Error) -> String {
    json!({ "kind": e.kind(), "error": e.to_string() }).to_string()
}

/// Process exit code: 0 when everything passed, 1 when a check or criterion failed, 2 on error.
pub fn main_with(args: &Args) -> i32 {
    match args.load().and_then(|cfg| run(&cfg, args.force)) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("passed: {}", outcome.passed);
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            2
        }
    }
}
