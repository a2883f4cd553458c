//! Kernel and Green's-function identities plus the trace inequality.

use super::config::Config;
use super::{Check, HarnessError, Report};
use crate::geometry::{polar, Point};
use crate::greens::GreensContext;
use crate::kernels::{eval_poisson, KernelPoint};
use crate::metrics::{check_trace_inequality, TraceSide, TraceTestField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Laplacian samples per radius.
const LAPLACIAN_SAMPLES: usize = 5;
/// Below this `e·R²` the discrete Laplacian error is roundoff and no rate is read off.
const LAPLACIAN_FLOOR: f64 = 1e-9;

fn solver(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Solver(e.to_string())
}

fn outside(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    polar(rng.random_range(lo..hi), rng.random_range(-PI..PI))
}

/// Random closed-form trace test field: modes `0..=4`, radial polynomials of degree at most 3.
pub(crate) fn random_trace_field(rng: &mut ChaCha8Rng) -> TraceTestField {
    let mut polys = |skip_zero: bool| -> Vec<Vec<f64>> {
        (0..=4)
            .map(|m| {
                if skip_zero && m == 0 {
                    return Vec::new();
                }
                let deg = rng.random_range(0..=3);
                (0..=deg).map(|_| rng.random_range(-1.0..=1.0)).collect()
            })
            .collect()
    };
    let cos_polys = polys(false);
    let sin_polys = polys(true);
    TraceTestField { cos_polys, sin_polys }
}

pub fn run_identity_suite(cfg: &Config) -> Result<Report, HarnessError> {
    let ic = &cfg.identities;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("identity suite");

    let n = ic.poisson_nodes;
    for &r in &ic.poisson_radii {
        let mut s = 0.0;
        for j in 0..n {
            let p = KernelPoint::new(r, -PI + 2.0 * PI * j as f64 / n as f64).map_err(solver)?;
            s += eval_poisson(p);
        }
        let err = (s / n as f64 - (1.0 - r).signum()).abs();
        report.push(Check::new(format!("Poisson normalization r={r}"), err, ic.poisson_tol));
    }

    if !ic.radii.is_empty() && ic.reflection_pairs > 0 {
        let mut worst = 0.0f64;
        for i in 0..ic.reflection_pairs {
            let c = GreensContext::new(ic.radii[i % ic.radii.len()]).map_err(solver)?;
            let r = c.radius();
            let x = outside(&mut rng, 1.01 * r, 4.0 * r);
            let y = outside(&mut rng, 1.01 * r, 4.0 * r);
            let lhs = (y - c.invert(&x).map_err(solver)?).norm().ln();
            let rhs = (c.invert(&y).map_err(solver)? - x).norm().ln() + y.norm().ln() - x.norm().ln();
            worst = worst.max((lhs - rhs).abs());
        }
        report.push(Check::new(format!("log-reflection, {} pairs", ic.reflection_pairs), worst, ic.reflection_tol));
    }

    for &r in &ic.radii {
        let c = GreensContext::new(r).map_err(solver)?;
        let mut worst = 0.0f64;
        for _ in 0..ic.benedetto_poles {
            let x = outside(&mut rng, 1.01 * r, 2.0 * r);
            for j in 0..ic.benedetto_nodes {
                let y = polar(r, -PI + 2.0 * PI * j as f64 / ic.benedetto_nodes as f64);
                let (a, b) = c.boundary_normal_derivatives(&x, &y).map_err(solver)?;
                worst = worst.max((a - b).abs());
            }
        }
        report.push(Check::new(format!("corrector flux match R={r}"), worst, ic.boundary_tol));

        let k = c.source_constant();
        let h = ic.laplacian_step * r;
        let (mut e_h, mut rate) = (0.0f64, 0.0f64);
        for _ in 0..LAPLACIAN_SAMPLES {
            let x = outside(&mut rng, 1.1 * r, 2.0 * r);
            let y = outside(&mut rng, 1.1 * r, 2.0 * r);
            let e1 = (c.corrector_discrete_laplacian(&x, &y, h).map_err(solver)? + k).abs() * r * r;
            let e2 = (c.corrector_discrete_laplacian(&x, &y, 0.5 * h).map_err(solver)? + k).abs() * r * r;
            e_h = e_h.max(e1);
            if e1 > LAPLACIAN_FLOOR {
                rate = rate.max(e2 / e1);
            }
        }
        report.push(Check::new(format!("k pi R^2 = 1 at step h, R={r}"), e_h, 1e-3));
        report.push(Check::new(format!("halving h divides error by >= 2.5, R={r}"), rate, 0.4));
    }

    if ic.trace_fields > 0 && !ic.trace_annuli.is_empty() {
        let mut worst = 0.0f64;
        for _ in 0..ic.trace_fields {
            let phi = random_trace_field(&mut rng);
            for a in &ic.trace_annuli {
                for side in [TraceSide::Inner, TraceSide::Outer] {
                    let (lhs, rhs) = check_trace_inequality(a[0], a[1], &phi, side).map_err(solver)?;
                    if rhs > 0.0 {
                        worst = worst.max(lhs / rhs);
                    } else if lhs > 0.0 {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
        let count = 2 * ic.trace_fields * ic.trace_annuli.len();
        report.push(Check::new(format!("trace inequality lhs/rhs, {count} checks"), worst, 1.0));
    }
    Ok(report)
}
