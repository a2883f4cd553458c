//! JSON experiment configuration.

use crate::boundary_data::{NeumannData, PeriodicFunction};
use crate::geometry::point;
use crate::holed::{Circle, HoledDomain};
use crate::metrics::GridSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub geometry_families: Vec<GeometryFamily>,
    #[serde(default)]
    pub data: DataFamily,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub relation: RelationConfig,
    #[serde(default)]
    pub identities: IdentityConfig,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
}

fn default_alpha() -> f64 {
    0.5
}

/// Trigonometric polynomial, both arrays indexed by mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigSpec {
    pub fn sample(&self, n: usize) -> Result<PeriodicFunction, ConfigError> {
        PeriodicFunction::from_trig_poly(&self.cos, &self.sin, n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFamily {
    pub outer: TrigSpec,
    /// Datum shared by every hole.
    pub holes: TrigSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Shift the outer mean so the flux balance holds.
    #[serde(default = "yes")]
    pub balance: bool,
}

fn default_samples() -> usize {
    256
}

fn yes() -> bool {
    true
}

impl Default for DataFamily {
    fn default() -> Self {
        Self {
            outer: TrigSpec { cos: vec![0.0, 1.0], sin: vec![0.0, 0.0, 0.0, 0.4] },
            holes: TrigSpec { cos: vec![0.2, 0.5], sin: vec![0.0, 0.0, 0.3] },
            samples: default_samples(),
            balance: true,
        }
    }
}

impl DataFamily {
    pub fn build(&self, dom: &HoledDomain) -> Result<NeumannData, ConfigError> {
        let outer = self.outer.sample(self.samples)?;
        let hole = self.holes.sample(self.samples)?;
        let holes = vec![hole; dom.n()];
        let radii = dom.hole_radii();
        let built = if self.balance {
            NeumannData::balanced(outer, holes, dom.r0(), &radii)
        } else {
            NeumannData::new(outer, holes, dom.r0(), &radii)
        };
        built.map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub centre: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub z0: [f64; 2],
    pub r0: f64,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
    pub d: f64,
}

impl GeometrySpec {
    /// The domain, without the separation check (reported separately).
    pub fn domain(&self) -> Result<HoledDomain, ConfigError> {
        let holes = self.holes.iter().map(|h| Circle::new(point(h.centre[0], h.centre[1]), h.radius)).collect();
        HoledDomain::new(Circle::new(point(self.z0[0], self.z0[1]), self.r0), holes, self.d)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryFamily {
    /// `n` holes of radius `d` on a ring about the centre of a disk of radius `r0`.
    Ring {
        n: Vec<usize>,
        d_over_r0: Vec<f64>,
        r0: Vec<f64>,
        #[serde(default)]
        data: Option<DataFamily>,
    },
    /// One explicit domain.
    Explicit {
        geometry: GeometrySpec,
        #[serde(default)]
        data: Option<DataFamily>,
    },
}

/// Holes of radius `d` on a circle of radius `ρ` about the origin.
///
/// `ρ = r0/2` when that keeps neighbouring holes `2d` apart and `2d` inside the
/// outer circle; otherwise the middle of the admissible range
/// `[2d / sin(π/n), r0 - 2d]`.
pub fn ring_geometry(n: usize, d: f64, r0: f64) -> GeometrySpec {
    let lo = if n >= 2 { 2.0 * d / (PI / n as f64).sin() } else { 0.0 };
    let hi = r0 - 2.0 * d;
    let rho = if (lo..=hi).contains(&(0.5 * r0)) { 0.5 * r0 } else { 0.5 * (lo + hi) };
    let holes = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            HoleSpec { centre: [rho * t.cos(), rho * t.sin()], radius: d }
        })
        .collect();
    GeometrySpec { z0: [0.0, 0.0], r0, holes, d }
}

/// One concrete sweep instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub geometry: GeometrySpec,
    pub data: DataFamily,
}

impl Config {
    /// Sweep instances in config order (ring families iterate `n`, then `d/r0`, then `r0`).
    pub fn instances(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        for fam in &self.geometry_families {
            match fam {
                GeometryFamily::Ring { n, d_over_r0, r0, data } => {
                    for &k in n {
                        for &q in d_over_r0 {
                            for &r in r0 {
                                out.push(Instance {
                                    geometry: ring_geometry(k, q * r, r),
                                    data: data.clone().unwrap_or_else(|| self.data.clone()),
                                });
                            }
                        }
                    }
                }
                GeometryFamily::Explicit { geometry, data } => out.push(Instance {
                    geometry: geometry.clone(),
                    data: data.clone().unwrap_or_else(|| self.data.clone()),
                }),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub nodes_per_circle: usize,
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { m: 48, nodes_per_circle: 196, residual_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub collar_radial: usize,
    pub collar_angular: usize,
    pub interior_divisor: f64,
}

impl From<GridConfig> for GridSpec {
    fn from(g: GridConfig) -> Self {
        GridSpec {
            collar_radial: g.collar_radial,
            collar_angular: g.collar_angular,
            interior_divisor: g.interior_divisor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub grids: GridConfig,
    /// Poincaré grid step is `min(d / poincare_divisor, poincare_max_step · r0)`.
    #[serde(default = "default_poincare_divisor")]
    pub poincare_divisor: f64,
    #[serde(default = "default_poincare_max_step")]
    pub poincare_max_step: f64,
}

fn default_poincare_divisor() -> f64 {
    4.0
}

fn default_poincare_max_step() -> f64 {
    0.02
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            grids: GridConfig {
                collar_radial: g.collar_radial,
                collar_angular: g.collar_angular,
                interior_divisor: g.interior_divisor,
            },
            poincare_divisor: default_poincare_divisor(),
            poincare_max_step: default_poincare_max_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationConfig {
    /// Number of random trigonometric data drawn from the seed.
    #[serde(default)]
    pub random_data: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Explicit data checked in addition to the random ones.
    #[serde(default)]
    pub data: Vec<TrigSpec>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_r_range")]
    pub r_range: [f64; 2],
    #[serde(default = "default_relation_samples")]
    pub samples: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_relation_tol")]
    pub tol: f64,
    #[serde(default = "default_rotation_tol")]
    pub rotation_tol: f64,
}

fn default_degree() -> usize {
    8
}
fn default_points() -> usize {
    100
}
fn default_r_range() -> [f64; 2] {
    [0.1, 0.9]
}
fn default_relation_samples() -> usize {
    512
}
fn default_fd_step() -> f64 {
    1e-5
}
fn default_relation_tol() -> f64 {
    1e-6
}
fn default_rotation_tol() -> f64 {
    1e-8
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self {
            random_data: 5,
            degree: default_degree(),
            data: Vec::new(),
            points: default_points(),
            r_range: default_r_range(),
            samples: default_relation_samples(),
            fd_step: default_fd_step(),
            tol: default_relation_tol(),
            rotation_tol: default_rotation_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    #[serde(default = "default_poisson_radii")]
    pub poisson_radii: Vec<f64>,
    #[serde(default = "default_poisson_nodes")]
    pub poisson_nodes: usize,
    #[serde(default = "default_poisson_tol")]
    pub poisson_tol: f64,
    pub reflection_pairs: usize,
    #[serde(default = "default_reflection_tol")]
    pub reflection_tol: f64,
    pub benedetto_poles: usize,
    pub benedetto_nodes: usize,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    pub radii: Vec<f64>,
    pub laplacian_step: f64,
    pub trace_fields: usize,
    pub trace_annuli: Vec<[f64; 2]>,
}

fn default_poisson_radii() -> Vec<f64> {
    vec![0.3, 0.7, 1.3, 1.8]
}
fn default_poisson_nodes() -> usize {
    512
}
fn default_poisson_tol() -> f64 {
    1e-10
}
fn default_reflection_tol() -> f64 {
    1e-12
}
fn default_boundary_tol() -> f64 {
    1e-8
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            poisson_radii: default_poisson_radii(),
            poisson_nodes: default_poisson_nodes(),
            poisson_tol: default_poisson_tol(),
            reflection_pairs: 1000,
            reflection_tol: default_reflection_tol(),
            benedetto_poles: 20,
            benedetto_nodes: 256,
            boundary_tol: default_boundary_tol(),
            radii: vec![0.5, 1.0, 2.0, 5.0],
            laplacian_step: 0.01,
            trace_fields: 50,
            trace_annuli: vec![[0.5, 1.0], [1.0, 2.0], [1.0, 1.1], [0.1, 3.0], [2.0, 2.5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub data: Option<DataFamily>,
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("built-in config is valid")
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        let s = &self.solver;
        if s.m == 0 || s.nodes_per_circle < 4 * s.m + 4 {
            return invalid(format!(
                "solver needs M >= 1 and nodes_per_circle >= 4M + 4 (M = {}, nodes = {})",
                s.m, s.nodes_per_circle
            ));
        }
        if !(s.residual_tol >= 0.0) {
            return invalid("solver.residual_tol must be non-negative");
        }
        let g = &self.metrics.grids;
        if g.collar_radial == 0 || g.collar_angular == 0 || !(g.interior_divisor > 0.0) {
            return invalid("metrics.grids entries must be positive");
        }
        if !(self.metrics.poincare_divisor >= 4.0) {
            return invalid("metrics.poincare_divisor must be at least 4 (grid step <= d/4)");
        }
        if !(self.metrics.poincare_max_step > 0.0) {
            return invalid("metrics.poincare_max_step must be positive");
        }
        for fam in &self.geometry_families {
            if let GeometryFamily::Ring { d_over_r0, r0, .. } = fam {
                if d_over_r0.iter().chain(r0).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return invalid("ring family lengths must be positive");
                }
            }
        }
        let r = &self.relation;
        if !(0.0 < r.r_range[0] && r.r_range[0] < r.r_range[1] && r.r_range[1] < 1.0) {
            return invalid(format!("relation.r_range {:?} must satisfy 0 < a < b < 1", r.r_range));
        }
        if !(r.fd_step > 0.0) || r.samples < 16 {
            return invalid("relation.fd_step must be positive and relation.samples >= 16");
        }
        if r.samples < 2 * r.degree + 2 {
            return invalid("relation.samples too small for relation.degree");
        }
        let id = &self.identities;
        for a in &id.trace_annuli {
            if !(a[0] > 0.0 && a[1] > a[0]) {
                return invalid(format!("trace annulus {:?} must satisfy 0 < rho1 < rho2", a));
            }
        }
        if id.poisson_radii.iter().any(|r| !(*r >= 0.0) || *r == 1.0) || id.poisson_nodes == 0 {
            return invalid("identities.poisson_radii must be non-negative and differ from 1");
        }
        if id.radii.iter().any(|r| !(*r > 0.0)) || !(id.laplacian_step > 0.0) || id.benedetto_nodes == 0 {
            return invalid("identities radii, laplacian_step and benedetto_nodes must be positive");
        }
        Ok(())
    }
}
