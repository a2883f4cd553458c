//! Experiment orchestration: relation-formula checks, identity checks,
//! scaling sweeps and one-off solves driven by a JSON config.

pub mod config;
mod identities;
mod relation;
mod solve;
mod sweep;

pub use config::{Config, ConfigError, GeometryFamily, GeometrySpec, DEFAULT_CONFIG};
pub use identities::run_identity_suite;
pub use relation::{random_trig_data, run_verify_relation};
pub use solve::{run_solve, ProbeValue, SolveOutcome};
pub use sweep::{run_instance, run_sweep, theorem_bounds, write_csv, SweepOutcome, SweepRecord, CSV_HEADER};

use std::fmt;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Solver(_) | HarnessError::Output(_) => EXIT_SOLVER,
        }
    }
}

/// One tabulated check: the worst observed value against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, worst: f64, tol: f64) -> Self {
        Self { name: name.into(), worst, tol }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        if self.checks.is_empty() {
            return writeln!(f, "  (no checks)");
        }
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(f, "  {tag}  {:<w$}  worst {:.3e}  tol {:.1e}", c.name, c.worst, c.tol)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        writeln!(f, "  {} checks, {} failed", self.checks.len(), failed)
    }
}
