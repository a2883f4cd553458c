//! Scaling sweeps of the four regularity estimates over geometry families.

use super::config::{Config, Instance};
use super::{HarnessError, EXIT_OK, EXIT_SOLVER, EXIT_TOLERANCE};
use crate::holed::{constant_b, estimate_poincare, solve_neumann_holed, validate_geometry, HoledDomain};
use crate::metrics::{
    check_l1_bound, datum_norms, field_norms, sample_region, DatumNorms, FieldNorms, GridSpec, Region,
};
use rayon::prelude::*;
use std::io::Write;

pub const CSV_HEADER: [&str; 24] = [
    "n", "d", "r0", "alpha", "C_P", "B", "g_sup", "g_hold", "gp_sup", "gp_hold", "Du_sup", "Du_hold", "D2u_sup",
    "D2u_hold", "bound1", "bound2", "bound3", "bound4", "ratio1", "ratio2", "ratio3", "ratio4", "residual", "flags",
];

pub const FLAG_GEOMETRY: &str = "geometry_invalid";
pub const FLAG_SOLVER: &str = "solver_failed";
pub const FLAG_RESIDUAL: &str = "residual_above_tol";
pub const FLAG_B_ZERO: &str = "B_zero";
pub const FLAG_G_ZERO: &str = "g_zero";
pub const FLAG_POINCARE: &str = "poincare_failed";

/// One sweep row. Quantities that could not be computed are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub d: f64,
    pub r0: f64,
    pub alpha: f64,
    pub c_p: f64,
    pub b: f64,
    pub datum: DatumNorms,
    pub norms: FieldNorms,
    pub bounds: [f64; 4],
    pub ratios: [f64; 4],
    pub residual: f64,
    /// `‖u‖_{L¹(E)} / (B ‖g‖∞)`; not part of the CSV.
    pub l1_ratio: f64,
    pub flags: Vec<&'static str>,
}

/// The right-hand sides of the four estimates with unit constant, in the order
/// `‖Du‖∞`, `[Du]_α`, `‖D²u‖∞`, `[D²u]_α`.
pub fn theorem_bounds(d: f64, r0: f64, alpha: f64, b: f64, g: &DatumNorms) -> [f64; 4] {
    let a = alpha;
    [
        (1.0 + b * d.powi(-4) * r0) * g.g_sup + r0.powf(a) * g.g_hold,
        (d.powf(-a) + b * d.powi(-5) * r0.powf(2.0 - a)) * g.g_sup + g.g_hold,
        (1.0 / d + b * d.powi(-5) * r0) * g.g_sup + d.powf(a - 1.0) * g.g_hold + g.gp_sup + r0.powf(a) * g.gp_hold,
        (d.powf(-1.0 - a) + b * d.powi(-6) * r0.powf(2.0 - a)) * g.g_sup
            + g.g_hold / d
            + d.powf(-a) * g.gp_sup
            + g.gp_hold,
    ]
}

const NAN_DATUM: DatumNorms = DatumNorms { g_sup: f64::NAN, g_hold: f64::NAN, gp_sup: f64::NAN, gp_hold: f64::NAN };
const NAN_NORMS: FieldNorms = FieldNorms {
    du_sup: f64::NAN,
    du_hold: f64::NAN,
    d2u_sup: f64::NAN,
    d2u_hold: f64::NAN,
    samples: 0,
    resolution: f64::NAN,
};

impl SweepRecord {
    fn empty(inst: &Instance, alpha: f64) -> Self {
        Self {
            n: inst.geometry.holes.len(),
            d: inst.geometry.d,
            r0: inst.geometry.r0,
            alpha,
            c_p: f64::NAN,
            b: f64::NAN,
            datum: NAN_DATUM,
            norms: NAN_NORMS,
            bounds: [f64::NAN; 4],
            ratios: [f64::NAN; 4],
            residual: f64::NAN,
            l1_ratio: f64::NAN,
            flags: Vec::new(),
        }
    }

    pub fn has_flag(&self, f: &str) -> bool {
        self.flags.contains(&f)
    }

    fn fields(&self) -> Vec<String> {
        let e = |v: f64| format!("{v:.12e}");
        let (g, u) = (&self.datum, &self.norms);
        let mut out = vec![self.n.to_string()];
        out.extend(
            [
                self.d, self.r0, self.alpha, self.c_p, self.b, g.g_sup, g.g_hold, g.gp_sup, g.gp_hold, u.du_sup,
                u.du_hold, u.d2u_sup, u.d2u_hold,
            ]
            .map(e),
        );
        out.extend(self.bounds.map(e));
        out.extend(self.ratios.map(e));
        out.push(e(self.residual));
        out.push(self.flags.join(";"));
        out
    }
}

/// Solve and measure one instance. Failures are recorded as flags.
pub fn run_instance(inst: &Instance, cfg: &Config) -> SweepRecord {
    let mut rec = SweepRecord::empty(inst, cfg.alpha);
    let dom = match inst.geometry.domain() {
        Ok(dom) if validate_geometry(&dom).passed() => dom,
        _ => {
            rec.flags.push(FLAG_GEOMETRY);
            return rec;
        }
    };
    let data = match inst.data.build(&dom) {
        Ok(data) => data,
        Err(_) => {
            rec.flags.push(FLAG_SOLVER);
            return rec;
        }
    };
    if let Ok(g) = datum_norms(&dom, &data, cfg.alpha) {
        rec.datum = g;
    }
    if rec.datum.g_sup == 0.0 {
        rec.flags.push(FLAG_G_ZERO);
    }
    measure(&dom, &data, cfg, &mut rec);
    rec
}

fn poincare_step(dom: &HoledDomain, cfg: &Config) -> f64 {
    (dom.d() / cfg.metrics.poincare_divisor).min(cfg.metrics.poincare_max_step * dom.r0())
}

fn measure(dom: &HoledDomain, data: &crate::NeumannData, cfg: &Config, rec: &mut SweepRecord) {
    match estimate_poincare(dom, poincare_step(dom, cfg)).and_then(|cp| constant_b(dom, cp.value).map(|b| (cp, b))) {
        Ok((cp, b)) => {
            rec.c_p = cp.value;
            rec.b = b.value;
            if b.degenerate {
                rec.flags.push(FLAG_B_ZERO);
            }
        }
        Err(_) => rec.flags.push(FLAG_POINCARE),
    }
    let s = &cfg.solver;
    let ansatz = match solve_neumann_holed(dom, data, s.m, s.nodes_per_circle) {
        Ok(a) => a,
        Err(_) => {
            rec.flags.push(FLAG_SOLVER);
            return;
        }
    };
    rec.residual = ansatz.residual();
    if !(rec.residual <= s.residual_tol) {
        rec.flags.push(FLAG_RESIDUAL);
    }
    let grid: GridSpec = cfg.metrics.grids.into();
    let sample = sample_region(&ansatz, dom, Region::Whole, &grid);
    if let Ok(norms) = field_norms(&sample, cfg.alpha) {
        rec.norms = norms;
    }
    rec.bounds = theorem_bounds(rec.d, rec.r0, rec.alpha, rec.b, &rec.datum);
    let u = [rec.norms.du_sup, rec.norms.du_hold, rec.norms.d2u_sup, rec.norms.d2u_hold];
    for i in 0..4 {
        rec.ratios[i] = u[i] / rec.bounds[i];
    }
    if rec.b.is_finite() {
        rec.l1_ratio = check_l1_bound(dom, data, &ansatz, rec.b).ratio;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// Largest finite value of each ratio over the rows.
    pub max_ratios: [f64; 4],
    /// Largest finite L¹ ratio over the rows.
    pub max_l1_ratio: f64,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.has_flag(FLAG_SOLVER) || r.has_flag(FLAG_POINCARE)) {
            EXIT_SOLVER
        } else if self.records.iter().any(|r| r.has_flag(FLAG_RESIDUAL)) {
            EXIT_TOLERANCE
        } else {
            EXIT_OK
        }
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!("sweep: {} instances\n", self.records.len());
        for r in &self.records {
            s += &format!(
                "  n={} d={:.4} r0={:.3}  ratios {:.3e} {:.3e} {:.3e} {:.3e}  residual {:.1e}  {}\n",
                r.n,
                r.d,
                r.r0,
                r.ratios[0],
                r.ratios[1],
                r.ratios[2],
                r.ratios[3],
                r.residual,
                r.flags.join(";")
            );
        }
        let m = self.max_ratios;
        s += &format!(
            "  max ratios {:.3e} {:.3e} {:.3e} {:.3e}  max L1 ratio {:.3e}\n",
            m[0], m[1], m[2], m[3], self.max_l1_ratio
        );
        s
    }
}

fn finite_max(v: impl Iterator<Item = f64>) -> f64 {
    v.filter(|x| x.is_finite()).fold(f64::NAN, f64::max)
}

/// Runs every instance of the config, concurrently, keeping config order.
pub fn run_sweep(cfg: &Config) -> SweepOutcome {
    let insts = cfg.instances();
    let records: Vec<SweepRecord> = insts.par_iter().map(|i| run_instance(i, cfg)).collect();
    let max_ratios = std::array::from_fn(|k| finite_max(records.iter().map(|r| r.ratios[k])));
    let max_l1_ratio = finite_max(records.iter().map(|r| r.l1_ratio));
    SweepOutcome { records, max_ratios, max_l1_ratio }
}

/// CSV with header, one row per record and a final `max` row carrying the largest ratios.
pub fn write_csv<W: Write>(out: &SweepOutcome, w: W) -> Result<(), HarnessError> {
    let io = |e: csv::Error| HarnessError::Output(e.to_string());
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in &out.records {
        wr.write_record(r.fields()).map_err(io)?;
    }
    let mut last = vec![String::new(); CSV_HEADER.len()];
    last[0] = "max".into();
    for k in 0..4 {
        last[18 + k] = format!("{:.12e}", out.max_ratios[k]);
    }
    last[23] = "summary".into();
    wr.write_record(&last).map_err(io)?;
    wr.flush().map_err(|e| HarnessError::Output(e.to_string()))
}
