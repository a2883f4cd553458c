//! One-off solve with probe-point output.

use super::config::Config;
use super::{HarnessError, EXIT_OK, EXIT_TOLERANCE};
use crate::field::HarmonicField;
use crate::geometry::point;
use crate::holed::{solve_neumann_holed, validate_geometry};
use std::fmt::Write as _;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeValue {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub residual: f64,
    pub condition: f64,
    pub constant: f64,
    pub residual_tol: f64,
    pub probes: Vec<ProbeValue>,
}

impl SolveOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.residual <= self.residual_tol {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "solve: residual {:.3e} (tol {:.1e})  condition {:.3e}  constant {:.6e}\n",
            self.residual, self.residual_tol, self.condition, self.constant
        );
        for p in &self.probes {
            let _ = writeln!(s, "  u({:.6}, {:.6}) = {:.12e}  Du = ({:.6e}, {:.6e})", p.x, p.y, p.u, p.ux, p.uy);
        }
        s
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let io = |e: csv::Error| HarnessError::Output(e.to_string());
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(["x", "y", "u", "ux", "uy"]).map_err(io)?;
        for p in &self.probes {
            wr.write_record([p.x, p.y, p.u, p.ux, p.uy].map(|v| format!("{v:.12e}"))).map_err(io)?;
        }
        wr.flush().map_err(|e| HarnessError::Output(e.to_string()))
    }
}

pub fn run_solve(cfg: &Config) -> Result<SolveOutcome, HarnessError> {
    let sc = cfg.solve.as_ref().ok_or_else(|| super::ConfigError::Invalid("missing `solve` section".into()))?;
    let dom = sc.geometry.domain()?;
    let rep = validate_geometry(&dom);
    if !rep.passed() {
        return Err(super::ConfigError::Invalid(format!("geometry fails separation checks: {rep:?}")).into());
    }
    let data = sc.data.as_ref().unwrap_or(&cfg.data).build(&dom)?;
    let s = &cfg.solver;
    let a =
        solve_neumann_holed(&dom, &data, s.m, s.nodes_per_circle).map_err(|e| HarnessError::Solver(e.to_string()))?;
    let mut probes = Vec::with_capacity(sc.probes.len());
    for p in &sc.probes {
        let x = point(p[0], p[1]);
        if !dom.contains(&x) {
            return Err(
                super::ConfigError::Invalid(format!("probe ({}, {}) lies outside the domain", p[0], p[1])).into()
            );
        }
        let g = a.gradient(&x);
        probes.push(ProbeValue { x: p[0], y: p[1], u: a.value(&x), ux: g.x, uy: g.y });
    }
    Ok(SolveOutcome {
        residual: a.residual(),
        condition: a.condition(),
        constant: a.constant(),
        residual_tol: s.residual_tol,
        probes,
    })
}
